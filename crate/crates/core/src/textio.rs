//! Shared helpers for the structured-text file formats.

use crate::error::Error;

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Converts a TOML decoding error into a positioned parse error.
pub(crate) fn toml_error(source_name: &str, text: &str, err: toml::de::Error) -> Error {
    let line = err.span().map_or(1, |s| line_of(text, s.start));
    Error::parse(source_name, line, err.message().to_string())
}

/// Single-character symbol from a string field.
pub(crate) fn symbol(source_name: &str, field: &str, s: &str) -> Result<char, Error> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(Error::parse(
            source_name,
            0,
            format!("{field}: symbols must be single characters, got {s:?}"),
        )),
    }
}
