use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::transcript::Utterance;
use crate::error::{Error, Result};

/// Caps on a segment: total duration in seconds and member count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentRule {
    pub max_seconds: f64,
    pub max_members: usize,
}

impl Default for SegmentRule {
    fn default() -> Self {
        SegmentRule {
            max_seconds: 10.0,
            max_members: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeechSegment {
    pub interview_id: String,
    pub ordinal: usize,
    pub members: Vec<Utterance>,
    pub total_duration: f64,
}

impl SpeechSegment {
    pub fn spans(&self) -> Vec<(f64, f64)> {
        self.members.iter().map(|u| (u.start, u.stop)).collect()
    }

    pub fn cut_entry(&self) -> CutEntry {
        CutEntry {
            interview_id: self.interview_id.clone(),
            ordinal: self.ordinal,
            spans: self.members.iter().map(|u| [u.start, u.stop]).collect(),
        }
    }
}

/// Greedy left-to-right grouping of one interview's utterances.
///
/// An utterance joins the open segment only if the segment stays within
/// `max_seconds` and below `max_members`; otherwise the open segment is
/// closed and the utterance starts a new one. A lone utterance longer than
/// `max_seconds` therefore becomes its own segment.
pub fn segment(utterances: &[Utterance], rule: SegmentRule) -> Result<Vec<SpeechSegment>> {
    if rule.max_seconds.is_nan() || rule.max_seconds <= 0.0 || rule.max_members == 0 {
        return Err(Error::Config(format!("invalid segment rule {rule:?}")));
    }
    let Some(first) = utterances.first() else {
        return Ok(Vec::new());
    };
    let interview = &first.interview_id;

    let mut out: Vec<SpeechSegment> = Vec::new();
    let mut open: Vec<Utterance> = Vec::new();
    let mut open_duration = 0.0;
    let mut flush = |open: &mut Vec<Utterance>, duration: &mut f64| {
        if !open.is_empty() {
            out.push(SpeechSegment {
                interview_id: interview.clone(),
                ordinal: out.len(),
                members: std::mem::take(open),
                total_duration: *duration,
            });
            *duration = 0.0;
        }
    };

    for u in utterances {
        if &u.interview_id != interview {
            return Err(Error::Validation(format!(
                "segment() got utterances from interviews `{interview}` and `{}`",
                u.interview_id
            )));
        }
        let d = u.duration();
        if d.is_nan() || d <= 0.0 {
            return Err(Error::Validation(format!(
                "utterance at {}s in `{interview}` has non-positive duration",
                u.start
            )));
        }
        let fits = open_duration + d <= rule.max_seconds && open.len() < rule.max_members;
        if !open.is_empty() && !fits {
            flush(&mut open, &mut open_duration);
        }
        open.push(u.clone());
        open_duration += d;
    }
    flush(&mut open, &mut open_duration);
    Ok(out)
}

/// One line of a cut list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutEntry {
    pub interview_id: String,
    pub ordinal: usize,
    pub spans: Vec<[f64; 2]>,
}

pub fn write_cut_list<W: Write>(mut w: W, entries: &[CutEntry]) -> Result<()> {
    for e in entries {
        let line = serde_json::to_string(e).expect("cut entries always serialize");
        writeln!(w, "{line}").map_err(|e| Error::io("<cut list>", e))?;
    }
    Ok(())
}

pub fn read_cut_list<R: BufRead>(r: R) -> Result<Vec<CutEntry>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<cut list>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i as u64 + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_durations(ds: &[f64]) -> Vec<Utterance> {
        let mut t = 0.0;
        ds.iter()
            .map(|&d| {
                let u = Utterance {
                    start: t,
                    stop: t + d,
                    speaker: "Participant".into(),
                    text: String::new(),
                    interview_id: "i".into(),
                };
                t += d + 0.25;
                u
            })
            .collect()
    }

    fn shape(ds: &[f64]) -> Vec<Vec<f64>> {
        segment(&from_durations(ds), SegmentRule::default())
            .unwrap()
            .iter()
            .map(|s| s.members.iter().map(Utterance::duration).collect())
            .collect()
    }

    #[test]
    fn hand_traced_fixtures() {
        assert_eq!(shape(&[3.0, 4.0, 5.0]), vec![vec![3.0, 4.0], vec![5.0]]);
        assert_eq!(shape(&[1.0; 6]), vec![vec![1.0; 5], vec![1.0]]);
        assert_eq!(shape(&[12.0]), vec![vec![12.0]]);
        assert!(shape(&[]).is_empty());
    }

    #[test]
    fn long_utterance_between_short_ones() {
        assert_eq!(shape(&[2.0, 12.0, 1.0]), vec![vec![2.0], vec![12.0], vec![1.0]]);
    }

    #[test]
    fn exact_limit_is_inclusive() {
        assert_eq!(shape(&[4.0, 6.0, 0.5]), vec![vec![4.0, 6.0], vec![0.5]]);
    }

    #[test]
    fn ordinals_and_durations() {
        let segs = segment(&from_durations(&[3.0, 4.0, 5.0]), SegmentRule::default()).unwrap();
        assert_eq!(segs[0].ordinal, 0);
        assert_eq!(segs[1].ordinal, 1);
        assert_eq!(segs[0].total_duration, 7.0);
    }

    #[test]
    fn non_positive_duration_rejected() {
        let mut u = from_durations(&[1.0]);
        u[0].stop = u[0].start;
        assert!(matches!(segment(&u, SegmentRule::default()), Err(Error::Validation(_))));
    }

    #[test]
    fn cut_list_roundtrip() {
        let segs = segment(&from_durations(&[3.0, 4.0, 5.0]), SegmentRule::default()).unwrap();
        let entries: Vec<CutEntry> = segs.iter().map(SpeechSegment::cut_entry).collect();
        let mut buf = Vec::new();
        write_cut_list(&mut buf, &entries).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(r#"{"interview_id":"i","ordinal":0,"spans":[[0.0,3.0],[3.25,7.25]]}"#));
        assert_eq!(read_cut_list(buf.as_slice()).unwrap(), entries);
    }
}
