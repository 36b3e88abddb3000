//! Conversion between byte offsets and char (Unicode scalar) offsets.

pub(crate) struct OffsetIndex {
    /// Byte offset of every char, plus the text length as a sentinel.
    /// Empty when the text is pure ASCII and the mapping is the identity.
    char_starts: Vec<usize>,
    len_bytes: usize,
}

impl OffsetIndex {
    pub(crate) fn new(text: &str) -> Self {
        let char_starts = if text.is_ascii() {
            Vec::new()
        } else {
            text.char_indices()
                .map(|(i, _)| i)
                .chain(std::iter::once(text.len()))
                .collect()
        };
        Self {
            char_starts,
            len_bytes: text.len(),
        }
    }

    pub(crate) fn len_chars(&self) -> usize {
        if self.char_starts.is_empty() {
            self.len_bytes
        } else {
            self.char_starts.len() - 1
        }
    }

    pub(crate) fn byte_of(&self, char_idx: usize) -> usize {
        if self.char_starts.is_empty() {
            char_idx.min(self.len_bytes)
        } else {
            self.char_starts[char_idx.min(self.char_starts.len() - 1)]
        }
    }

    /// Char offset of a byte offset that lies on a char boundary.
    pub(crate) fn char_of(&self, byte_idx: usize) -> usize {
        if self.char_starts.is_empty() {
            byte_idx
        } else {
            match self.char_starts.binary_search(&byte_idx) {
                Ok(i) => i,
                Err(i) => i.saturating_sub(1),
            }
        }
    }
}

/// Slice `text` by char offsets.
pub(crate) fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let index = OffsetIndex::new(text);
    &text[index.byte_of(start)..index.byte_of(end)]
}
