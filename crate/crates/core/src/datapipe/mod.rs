//! Data preparation: transcripts, speech segmentation, WAV cutting,
//! embedding manifests and batching.

mod batch;
mod manifest;
mod segment;
mod transcript;
mod wav;

pub use batch::{batch_indices, batches};
pub use manifest::{read_manifest, write_manifest, Example, Gender, Manifest, ManifestHeader, Split, Task};
pub use segment::{read_cut_list, segment, write_cut_list, CutEntry, SegmentRule, SpeechSegment};
pub use transcript::{drop_tail, parse_transcript, ExclusionList, Utterance, PARTICIPANT};
pub use wav::{slice_segment, slice_wav, PcmWav};
