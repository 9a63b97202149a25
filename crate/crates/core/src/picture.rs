//! Pictures: non-empty rectangular grids of symbols.

use std::fmt;

use crate::error::{Error, Result};

/// White in the binary picture alphabet.
pub const WHITE: char = 'a';
/// Black in the binary picture alphabet.
pub const BLACK: char = 'b';

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Picture {
    height: usize,
    width: usize,
    cells: Vec<char>,
}

impl Picture {
    /// Builds a picture from row-major cells.
    pub fn new(height: usize, width: usize, cells: Vec<char>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter(format!(
                "pictures must be non-empty, got {height}x{width}"
            )));
        }
        if cells.len() != height * width {
            return Err(Error::InvalidParameter(format!(
                "{height}x{width} picture needs {} cells, got {}",
                height * width,
                cells.len()
            )));
        }
        Ok(Picture { height, width, cells })
    }

    /// Builds a picture from equal-length rows of symbols, e.g. `["ab", "ba"]`.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map(|r| r.as_ref().chars().count()).unwrap_or(0);
        let mut cells = Vec::with_capacity(height * width);
        for (i, row) in rows.iter().enumerate() {
            let before = cells.len();
            cells.extend(row.as_ref().chars());
            if cells.len() - before != width {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has {} symbols, expected {width}",
                    cells.len() - before
                )));
            }
        }
        Picture::new(height, width, cells)
    }

    pub fn filled(height: usize, width: usize, symbol: char) -> Result<Self> {
        Picture::new(height, width, vec![symbol; height * width])
    }

    /// Binary picture whose row-major cell `k` is black iff bit `k` of `bits` is set.
    pub fn from_bits(height: usize, width: usize, bits: u64) -> Result<Self> {
        if height * width > 64 {
            return Err(Error::InvalidParameter(format!(
                "{height}x{width} does not fit a 64-bit code"
            )));
        }
        let cells = (0..height * width)
            .map(|k| if (bits >> k) & 1 == 1 { BLACK } else { WHITE })
            .collect();
        Picture::new(height, width, cells)
    }

    /// Every binary picture of the given size, in bit-code order.
    pub fn enumerate_binary(height: usize, width: usize) -> impl Iterator<Item = Picture> {
        let cells = height * width;
        assert!(cells <= 30, "exhaustive enumeration limited to 30 cells");
        (0..1u64 << cells).map(move |bits| Picture::from_bits(height, width, bits).expect("valid size"))
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn size(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn cells(&self) -> &[char] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> char {
        assert!(row < self.height && col < self.width, "cell ({row}, {col}) out of range");
        self.cells[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[char] {
        &self.cells[row * self.width..(row + 1) * self.width]
    }

    pub fn transpose(&self) -> Picture {
        let mut cells = Vec::with_capacity(self.cells.len());
        for j in 0..self.width {
            for i in 0..self.height {
                cells.push(self.get(i, j));
            }
        }
        Picture {
            height: self.width,
            width: self.height,
            cells,
        }
    }

    pub fn check_binary(&self) -> Result<()> {
        match self.cells.iter().find(|&&c| c != WHITE && c != BLACK) {
            Some(&c) => Err(Error::NonBinary(c)),
            None => Ok(()),
        }
    }

    /// Parses a picture file: one row of symbols per line; blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut rows: Vec<(usize, String)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((first_line, first)) = rows.first() {
                if line.chars().count() != first.chars().count() {
                    return Err(Error::parse(
                        source_name,
                        lineno + 1,
                        format!(
                            "row has {} symbols but line {first_line} has {}",
                            line.chars().count(),
                            first.chars().count()
                        ),
                    ));
                }
            }
            rows.push((lineno + 1, line.to_string()));
        }
        if rows.is_empty() {
            return Err(Error::parse(source_name, text.lines().count().max(1), "empty picture"));
        }
        let rows: Vec<String> = rows.into_iter().map(|(_, r)| r).collect();
        Picture::from_rows(&rows)
    }
}

impl fmt::Display for Picture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.height {
            if i > 0 {
                writeln!(f)?;
            }
            for &c in self.row(i) {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}
