//! Keyword extraction: compiled keyword sets, sentence splitting, per-filing
//! scanning and seeded sampling of matches.

mod keywords;
mod sample;
mod scan;
mod sentences;

pub use keywords::{
    compile_keywords, default_ai_keywords, load_keyword_file, parse_keyword_file, CaseMode,
    KeywordError, KeywordHit, KeywordPattern, KeywordSet,
};
pub use sample::{sample_matches, sample_without_replacement, SampleError};
pub use scan::{scan, MatchRecord, RecordError, ScanOutput, SectionSelection, SentenceRecord};
pub use sentences::{normalized_key, split_sentences};
