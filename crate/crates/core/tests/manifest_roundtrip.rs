use datspeech::datapipe::{read_manifest, write_manifest, Example, Gender, Manifest, ManifestHeader, Split, Task};
use datspeech::Error;
use proptest::prelude::*;

fn example(dim: usize) -> impl Strategy<Value = Example> {
    (
        "[a-z0-9_-]{1,12}",
        "[A-Za-z0-9 ]{0,8}",
        any::<bool>(),
        0u8..=1,
        any::<bool>(),
        prop::collection::vec(prop::num::f32::NORMAL | prop::num::f32::ZERO, dim),
    )
        .prop_map(|(id, participant, female, label, test, embedding)| Example {
            id,
            participant,
            gender: if female { Gender::Female } else { Gender::Male },
            label,
            split: if test { Split::Test } else { Split::Train },
            embedding,
        })
}

fn manifest() -> impl Strategy<Value = Manifest> {
    (1usize..8, any::<bool>()).prop_flat_map(|(dim, ptsd)| {
        prop::collection::vec(example(dim), 0..20).prop_map(move |mut examples| {
            examples.sort_by(|a, b| a.id.cmp(&b.id));
            examples.dedup_by(|a, b| a.id == b.id);
            Manifest::new(
                ManifestHeader {
                    dim,
                    task: if ptsd { Task::Ptsd } else { Task::Depression },
                },
                examples,
            )
        })
    })
}

proptest! {
    #[test]
    fn write_then_read_is_identity(m in manifest()) {
        let mut buf = Vec::new();
        write_manifest(&mut buf, &m).unwrap();
        let back = read_manifest(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &m);
        let mut again = Vec::new();
        write_manifest(&mut again, &back).unwrap();
        prop_assert_eq!(again, buf);
    }
}

#[test]
fn duplicate_ids_and_bad_json_are_reported() {
    let dup = "{\"dim\":1,\"task\":\"ptsd\"}\n\
               {\"id\":\"a\",\"participant\":\"p\",\"gender\":0,\"label\":0,\"split\":\"test\",\"embedding\":[1.0]}\n\
               {\"id\":\"a\",\"participant\":\"p\",\"gender\":0,\"label\":0,\"split\":\"test\",\"embedding\":[1.0]}\n";
    assert!(matches!(read_manifest(dup.as_bytes()), Err(Error::Validation(m)) if m.contains("`a`")));
    let broken = "{\"dim\":1,\"task\":\"ptsd\"}\n{not json\n";
    assert!(matches!(read_manifest(broken.as_bytes()), Err(Error::Parse { line: 2, .. })));
}
