//! Minimal RIFF/WAVE reader and writer for 16-bit mono PCM.

use super::segment::SpeechSegment;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PcmWav {
    pub sample_rate: u32,
    pub samples: Vec<i16>,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

impl PcmWav {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
            return Err(Error::Format("not a RIFF/WAVE stream".into()));
        }
        let mut at = 12;
        let mut sample_rate = None;
        let mut data = None;
        while at + 8 <= bytes.len() {
            let id = &bytes[at..at + 4];
            let size = u32_at(bytes, at + 4) as usize;
            let body = at + 8;
            let end = body
                .checked_add(size)
                .filter(|&e| e <= bytes.len())
                .ok_or_else(|| Error::Format(format!("chunk {:?} is truncated", String::from_utf8_lossy(id))))?;
            match id {
                b"fmt " => {
                    if size < 16 {
                        return Err(Error::Format("fmt chunk too short".into()));
                    }
                    let format = u16_at(bytes, body);
                    let channels = u16_at(bytes, body + 2);
                    let bits = u16_at(bytes, body + 14);
                    if format != 1 || channels != 1 || bits != 16 {
                        return Err(Error::Format(format!(
                            "need 16-bit mono PCM, got format {format}, {channels} channel(s), {bits} bits"
                        )));
                    }
                    sample_rate = Some(u32_at(bytes, body + 4));
                }
                b"data" => data = Some(&bytes[body..end]),
                _ => {}
            }
            at = end + (size & 1);
        }
        let sample_rate = sample_rate.ok_or_else(|| Error::Format("missing fmt chunk".into()))?;
        let data = data.ok_or_else(|| Error::Format("missing data chunk".into()))?;
        if data.len() % 2 != 0 {
            return Err(Error::Format("data chunk has an odd byte count".into()));
        }
        if sample_rate == 0 {
            return Err(Error::Format("sample rate is zero".into()));
        }
        let samples = data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]))
            .collect();
        Ok(PcmWav {
            sample_rate,
            samples,
        })
    }

    /// Canonical 44-byte header followed by the samples.
    pub fn to_bytes(&self) -> Vec<u8> {
        let data_len = (self.samples.len() * 2) as u32;
        let mut out = Vec::with_capacity(44 + data_len as usize);
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data_len).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&self.sample_rate.to_le_bytes());
        out.extend_from_slice(&(self.sample_rate * 2).to_le_bytes());
        out.extend_from_slice(&2u16.to_le_bytes());
        out.extend_from_slice(&16u16.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&data_len.to_le_bytes());
        for s in &self.samples {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sample index range `[round(start * sr), round(stop * sr))`.
    pub fn span_range(&self, start: f64, stop: f64) -> Result<std::ops::Range<usize>> {
        let sr = self.sample_rate as f64;
        let (a, b) = ((start * sr).round(), (stop * sr).round());
        if !(a >= 0.0 && a <= b) {
            return Err(Error::Range(format!("invalid span [{start}, {stop})")));
        }
        let (a, b) = (a as usize, b as usize);
        if b > self.samples.len() {
            return Err(Error::Range(format!(
                "span [{start}, {stop}) ends at sample {b}, file has {}",
                self.samples.len()
            )));
        }
        Ok(a..b)
    }

    /// Concatenation of the given spans, at the same rate and depth.
    pub fn slice(&self, spans: &[(f64, f64)]) -> Result<PcmWav> {
        let mut samples = Vec::new();
        for &(start, stop) in spans {
            samples.extend_from_slice(&self.samples[self.span_range(start, stop)?]);
        }
        Ok(PcmWav {
            sample_rate: self.sample_rate,
            samples,
        })
    }
}

/// Cuts the spans out of a WAV byte stream and re-encodes them as one file.
pub fn slice_wav(wav: &[u8], spans: &[(f64, f64)]) -> Result<Vec<u8>> {
    Ok(PcmWav::parse(wav)?.slice(spans)?.to_bytes())
}

pub fn slice_segment(wav: &[u8], segment: &SpeechSegment) -> Result<Vec<u8>> {
    slice_wav(wav, &segment.spans())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(sr: u32, n: usize) -> PcmWav {
        PcmWav {
            sample_rate: sr,
            samples: (0..n).map(|i| (i % 30000) as i16 - 15000).collect(),
        }
    }

    #[test]
    fn header_roundtrip() {
        let w = ramp(16000, 100);
        let bytes = w.to_bytes();
        assert_eq!(bytes.len(), 44 + 200);
        assert_eq!(PcmWav::parse(&bytes).unwrap(), w);
    }

    #[test]
    fn half_second_span() {
        let w = ramp(16000, 32000);
        let out = PcmWav::parse(&slice_wav(&w.to_bytes(), &[(0.5, 1.0)]).unwrap()).unwrap();
        assert_eq!(out.samples.len(), 8000);
        assert_eq!(out.samples, w.samples[8000..16000]);
    }

    #[test]
    fn whole_file_keeps_data_bytes() {
        let w = ramp(16000, 16000);
        let bytes = w.to_bytes();
        let out = slice_wav(&bytes, &[(0.0, 1.0)]).unwrap();
        assert_eq!(out[44..], bytes[44..]);
    }

    #[test]
    fn two_members() {
        let w = ramp(16000, 16000);
        let out = PcmWav::parse(&slice_wav(&w.to_bytes(), &[(0.0, 0.1), (0.2, 0.3)]).unwrap()).unwrap();
        assert_eq!(out.samples.len(), 3200);
    }

    #[test]
    fn errors() {
        let w = ramp(16000, 16000);
        assert!(matches!(slice_wav(&w.to_bytes(), &[(0.5, 1.5)]), Err(Error::Range(_))));
        assert!(matches!(slice_wav(b"garbage", &[]), Err(Error::Format(_))));
        let mut stereo = w.to_bytes();
        stereo[22] = 2;
        assert!(matches!(slice_wav(&stereo, &[]), Err(Error::Format(_))));
        let truncated = &w.to_bytes()[..100];
        assert!(matches!(PcmWav::parse(truncated), Err(Error::Format(_))));
    }

    #[test]
    fn skips_unknown_chunks() {
        let w = ramp(8000, 10);
        let b = w.to_bytes();
        let mut with_list = b[..36].to_vec();
        with_list.extend_from_slice(b"LIST");
        with_list.extend_from_slice(&3u32.to_le_bytes());
        with_list.extend_from_slice(&[1, 2, 3, 0]);
        with_list.extend_from_slice(&b[36..]);
        assert_eq!(PcmWav::parse(&with_list).unwrap(), w);
    }
}
