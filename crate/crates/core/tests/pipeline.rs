//! Transcript -> segments -> cut list -> WAV slices.

use datspeech::datapipe::{
    drop_tail, parse_transcript, read_cut_list, segment, slice_segment, write_cut_list, ExclusionList, PcmWav,
    SegmentRule, SpeechSegment,
};

const TRANSCRIPT: &str = "start_time,stop_time,speaker,value
0.5,2.5,Ellie,how are you doing today
3.0,6.0,Participant,i'm doing okay
6.5,9.0,Participant,pretty tired though
9.5,11.0,Ellie,why is that
11.5,15.5,Participant,not sleeping well
16.0,16.5,Participant,yeah
17.0,19.0,Participant,bye
";

#[test]
fn transcript_to_wav_slices() {
    let utts = parse_transcript(TRANSCRIPT.as_bytes(), "301").unwrap();
    assert_eq!(utts.len(), 5);
    let exclusions = ExclusionList::parse("interview_id,start_time\n301,16.0\n".as_bytes()).unwrap();
    let kept = drop_tail(&exclusions.apply(utts), 1);
    let starts: Vec<f64> = kept.iter().map(|u| u.start).collect();
    assert_eq!(starts, vec![3.0, 6.5, 11.5]);

    // 3 + 2.5 fits, adding 4 would reach 9.5 which still fits.
    let segs = segment(&kept, SegmentRule::default()).unwrap();
    assert_eq!(segs.len(), 1);
    assert_eq!(segs[0].total_duration, 9.5);

    let mut cut_list = Vec::new();
    write_cut_list(&mut cut_list, &segs.iter().map(SpeechSegment::cut_entry).collect::<Vec<_>>()).unwrap();
    let entries = read_cut_list(cut_list.as_slice()).unwrap();
    assert_eq!(entries[0].spans, vec![[3.0, 6.0], [6.5, 9.0], [11.5, 15.5]]);

    let sr = 8000;
    let wav = PcmWav {
        sample_rate: sr,
        samples: (0..20 * sr).map(|i| (i % 1000) as i16).collect(),
    };
    let out = PcmWav::parse(&slice_segment(&wav.to_bytes(), &segs[0]).unwrap()).unwrap();
    assert_eq!(out.samples.len(), (9.5 * sr as f64) as usize);
    assert_eq!(out.samples[0], wav.samples[24000]);
    assert_eq!(out.samples[24000], wav.samples[52000]);
}
