use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speaker tag of interviewee rows; every other speaker is dropped.
pub const PARTICIPANT: &str = "Participant";

const HEADER: [&str; 4] = ["start_time", "stop_time", "speaker", "value"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub start: f64,
    pub stop: f64,
    pub speaker: String,
    pub text: String,
    pub interview_id: String,
}

impl Utterance {
    pub fn duration(&self) -> f64 {
        self.stop - self.start
    }
}

/// Reads a `start_time,stop_time,speaker,value` CSV transcript and keeps the
/// participant rows in file order.
pub fn parse_transcript<R: Read>(reader: R, interview_id: &str) -> Result<Vec<Utterance>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_err(1, e))?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}, got {:?}", HEADER.join(","), header),
        });
    }

    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let time = |i: usize| -> Result<f64> {
            let field = &record[i];
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("`{field}` is not a non-negative time in seconds"),
                })
        };
        let (start, stop) = (time(0)?, time(1)?);
        if stop <= start {
            return Err(Error::Validation(format!(
                "line {line}: stop time {stop} is not after start time {start}"
            )));
        }
        if &record[2] != PARTICIPANT {
            continue;
        }
        out.push(Utterance {
            start,
            stop,
            speaker: record[2].to_string(),
            text: record[3].to_string(),
            interview_id: interview_id.to_string(),
        });
    }
    Ok(out)
}

fn parse_err(line: u64, e: csv::Error) -> Error {
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Removes the last `n` utterances of one interview.
pub fn drop_tail(utterances: &[Utterance], n: usize) -> Vec<Utterance> {
    let keep = utterances.len().saturating_sub(n);
    utterances[..keep].to_vec()
}

/// Utterances to discard by hand, keyed by interview and start time.
///
/// The file is a CSV with header `interview_id,start_time`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExclusionList {
    entries: Vec<(String, f64)>,
}

impl ExclusionList {
    pub fn parse<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| parse_err(1, e))?.clone();
        if header.iter().collect::<Vec<_>>() != ["interview_id", "start_time"] {
            return Err(Error::Parse {
                line: 1,
                message: "expected header interview_id,start_time".into(),
            });
        }
        let mut entries = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e))?;
            let line = record.position().map_or(0, |p| p.line());
            let start = record[1].parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("`{}` is not a time", &record[1]),
            })?;
            entries.push((record[0].to_string(), start));
        }
        Ok(ExclusionList { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn excludes(&self, u: &Utterance) -> bool {
        self.entries
            .iter()
            .any(|(id, s)| *id == u.interview_id && (s - u.start).abs() < 1e-6)
    }

    pub fn apply(&self, utterances: Vec<Utterance>) -> Vec<Utterance> {
        utterances.into_iter().filter(|u| !self.excludes(u)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "start_time,stop_time,speaker,value\n";

    #[test]
    fn header_only_is_empty() {
        assert!(parse_transcript(HEAD.as_bytes(), "300").unwrap().is_empty());
    }

    #[test]
    fn keeps_participant_rows_in_order() {
        let text = format!(
            "{HEAD}0.0,1.0,Ellie,hi how are you\n1.5,2.0,Participant,hello\n2.5,4.0,Participant,\"fine, thanks\"\n"
        );
        let u = parse_transcript(text.as_bytes(), "300").unwrap();
        assert_eq!(u.len(), 2);
        assert_eq!((u[0].start, u[0].stop), (1.5, 2.0));
        assert_eq!(u[0].text, "hello");
        assert_eq!(u[1].text, "fine, thanks");
        assert_eq!(u[1].interview_id, "300");
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = format!("{HEAD}1.0,2.0,Participant,ok\nabc,3.0,Participant,bad\n");
        match parse_transcript(text.as_bytes(), "x") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = format!("{HEAD}1.0,2.0,Participant\n");
        assert!(matches!(parse_transcript(text.as_bytes(), "x"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn reversed_times_fail_validation() {
        let text = format!("{HEAD}2.0,2.0,Participant,zero\n");
        assert!(matches!(parse_transcript(text.as_bytes(), "x"), Err(Error::Validation(_))));
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(parse_transcript("a,b,c,d\n".as_bytes(), "x").is_err());
    }

    fn utts(n: usize) -> Vec<Utterance> {
        (0..n)
            .map(|i| Utterance {
                start: i as f64,
                stop: i as f64 + 0.5,
                speaker: PARTICIPANT.into(),
                text: String::new(),
                interview_id: "a".into(),
            })
            .collect()
    }

    #[test]
    fn drop_tail_cases() {
        let five = utts(5);
        assert_eq!(drop_tail(&five, 2), five[..3].to_vec());
        assert!(drop_tail(&utts(2), 2).is_empty());
        assert!(drop_tail(&utts(1), 2).is_empty());
        assert_eq!(drop_tail(&five, 0), five);
    }

    #[test]
    fn exclusion_list_filters_by_start_time() {
        let list = ExclusionList::parse("interview_id,start_time\na,1\nb,0\n".as_bytes()).unwrap();
        let kept = list.apply(utts(3));
        assert_eq!(kept.iter().map(|u| u.start).collect::<Vec<_>>(), vec![0.0, 2.0]);
    }
}
