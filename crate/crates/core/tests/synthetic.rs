use datspeech::evalkit::{probe_representations, ProbeConfig};
use datspeech::synthgen::{allocate_counts, generate, SynthConfig, CELLS};
use datspeech::trainer::stack_embeddings;

#[test]
fn no_gender_signal_means_chance_probe() {
    let cfg = SynthConfig {
        gender_signal: 0.0,
        joint: [0.25; 4],
        ..SynthConfig::default()
    };
    let ex = generate(&cfg).unwrap();
    let genders: Vec<_> = ex.iter().map(|e| e.gender).collect();
    let acc = probe_representations(&stack_embeddings(&ex).unwrap(), &genders, &ProbeConfig::default()).unwrap();
    assert!((acc - 0.5).abs() <= 0.05, "{acc}");
}

#[test]
fn strong_gender_signal_is_linearly_recoverable() {
    let cfg = SynthConfig {
        gender_signal: 4.0,
        ..SynthConfig::default()
    };
    let ex = generate(&cfg).unwrap();
    let genders: Vec<_> = ex.iter().map(|e| e.gender).collect();
    let acc = probe_representations(&stack_embeddings(&ex).unwrap(), &genders, &ProbeConfig::default()).unwrap();
    assert!(acc > 0.97, "{acc}");
}

#[test]
fn group_means_match_construction() {
    let cfg = SynthConfig::default();
    let ex = generate(&cfg).unwrap();
    let counts = allocate_counts(cfg.n, &cfg.joint);
    for (cell, &(gender, label)) in CELLS.iter().enumerate() {
        let members: Vec<_> = ex.iter().filter(|e| e.gender == gender && e.label == label).collect();
        assert_eq!(members.len(), counts[cell]);
        let bound = 3.0 * cfg.noise_sigma / (members.len() as f64).sqrt();
        for d in 0..cfg.dim {
            let mean = members.iter().map(|e| f64::from(e.embedding[d])).sum::<f64>() / members.len() as f64;
            let expected = match d {
                0 => cfg.label_signal * f64::from(label),
                1 => cfg.gender_signal * gender.index() as f64,
                _ => 0.0,
            };
            assert!((mean - expected).abs() <= bound, "cell {cell} dim {d}: {mean} vs {expected}");
        }
    }
}

/// Closed-form least squares on `[x, 1]` against targets +-1, solved by
/// Gaussian elimination on the normal equations.
fn least_squares_accuracy(rows: &[Vec<f64>], targets: &[f64]) -> f64 {
    let p = rows[0].len() + 1;
    let mut a = vec![vec![0.0; p + 1]; p];
    for (x, &t) in rows.iter().zip(targets) {
        let xa: Vec<f64> = x.iter().copied().chain([1.0]).collect();
        for i in 0..p {
            for j in 0..p {
                a[i][j] += xa[i] * xa[j];
            }
            a[i][p] += xa[i] * t;
        }
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        for r in 0..p {
            if r != col {
                let f = a[r][col] / a[col][col];
                let pivot_row = a[col].clone();
                for (dst, src) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                    *dst -= f * src;
                }
            }
        }
    }
    let w: Vec<f64> = (0..p).map(|i| a[i][p] / a[i][i]).collect();
    let correct = rows
        .iter()
        .zip(targets)
        .filter(|(x, &t)| {
            let s: f64 = x.iter().zip(&w).map(|(v, wi)| v * wi).sum::<f64>() + w[p - 1];
            (s > 0.0) == (t > 0.0)
        })
        .count();
    correct as f64 / rows.len() as f64
}

#[test]
fn least_squares_separates_gender_on_defaults() {
    let ex = generate(&SynthConfig::default()).unwrap();
    let rows: Vec<Vec<f64>> = ex.iter().map(|e| e.embedding.iter().map(|&v| f64::from(v)).collect()).collect();
    let targets: Vec<f64> = ex.iter().map(|e| if e.gender.index() == 1 { 1.0 } else { -1.0 }).collect();
    let acc = least_squares_accuracy(&rows, &targets);
    assert!(acc > 0.9, "least-squares gender accuracy {acc}");
}

proptest::proptest! {
    #[test]
    fn counts_sum_to_n_and_stay_within_one(n in 0usize..100_000, raw in proptest::array::uniform4(0.0f64..1.0)) {
        let total: f64 = raw.iter().sum();
        proptest::prop_assume!(total > 1e-6);
        let joint = raw.map(|r| r / total);
        let counts = allocate_counts(n, &joint);
        proptest::prop_assert_eq!(counts.iter().sum::<usize>(), n);
        for (c, p) in counts.iter().zip(joint) {
            proptest::prop_assert!((*c as f64 - n as f64 * p).abs() < 1.0);
        }
    }
}
