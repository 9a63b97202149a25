//! Bars & Stripes and Shifting Bits: membership, targets and balanced datasets.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::picture::{Picture, BLACK, WHITE};

/// Whether every column is constant (vertical bars) or every row is constant
/// (horizontal stripes).
pub fn bs_membership(p: &Picture) -> Result<bool> {
    p.check_binary()?;
    let m = p.height();
    let columns_constant = (0..m - 1).all(|i| p.row(i) == p.row(i + 1));
    let rows_constant = (0..m).all(|i| p.row(i).windows(2).all(|w| w[0] == w[1]));
    Ok(columns_constant || rows_constant)
}

/// 2 on constant pictures, 1 on the other Bars & Stripes members, 0 otherwise.
pub fn bs_target(p: &Picture) -> Result<f64> {
    if !bs_membership(p)? {
        return Ok(0.0);
    }
    let first = p.cells()[0];
    Ok(if p.cells().iter().all(|&c| c == first) { 2.0 } else { 1.0 })
}

/// Whether some shift `s` in `1..=width` turns every row into the next one, cells
/// shifted in from the left being black.
pub fn sb_membership(p: &Picture) -> Result<bool> {
    p.check_binary()?;
    let (m, n) = p.size();
    Ok((1..=n).any(|s| (0..m - 1).all(|i| shifted(p.row(i), s) == p.row(i + 1))))
}

fn shifted(row: &[char], s: usize) -> Vec<char> {
    (0..row.len())
        .map(|j| if j >= s { row[j - s] } else { BLACK })
        .collect()
}

/// The picture whose first row is `first_row` and whose every following row is the
/// previous one shifted right by `shift` with black fill.
pub fn sb_from_shift(first_row: &[char], shift: usize, height: usize) -> Result<Picture> {
    let n = first_row.len();
    if height == 0 || n == 0 {
        return Err(Error::InvalidParameter("pictures must be non-empty".into()));
    }
    if shift == 0 || shift > n {
        return Err(Error::InvalidParameter(format!("shift {shift} outside 1..={n}")));
    }
    let mut cells = first_row.to_vec();
    let mut row = first_row.to_vec();
    for _ in 1..height {
        row = shifted(&row, shift);
        cells.extend_from_slice(&row);
    }
    let p = Picture::new(height, n, cells)?;
    p.check_binary()?;
    Ok(p)
}

/// All `2^m + 2^n - 2` Bars & Stripes pictures of size `m x n`, without repetition.
pub fn bs_positives(m: usize, n: usize) -> Result<Vec<Picture>> {
    if m == 0 || n == 0 || m > 20 || n > 20 {
        return Err(Error::InvalidParameter(format!("cannot enumerate {m}x{n} Bars & Stripes")));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut push = |p: Picture| {
        if seen.insert(p.clone()) {
            out.push(p);
        }
    };
    for bits in 0..1u64 << n {
        // vertical bars: every row equals the pattern
        let row: Vec<char> = (0..n).map(|j| if bits >> j & 1 == 1 { BLACK } else { WHITE }).collect();
        push(Picture::new(m, n, row.repeat(m))?);
    }
    for bits in 0..1u64 << m {
        let cells = (0..m)
            .flat_map(|i| std::iter::repeat_n(if bits >> i & 1 == 1 { BLACK } else { WHITE }, n))
            .collect();
        push(Picture::new(m, n, cells)?);
    }
    Ok(out)
}

/// Distinct Shifting Bits pictures of size `m x n`, or `None` when there are too many
/// generator pairs to enumerate.
pub fn sb_positives(m: usize, n: usize) -> Option<Vec<Picture>> {
    if m == 0 || n == 0 || n >= 32 || (n << n) > SB_ENUMERATION_LIMIT {
        return None;
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for bits in 0..1u64 << n {
        let row: Vec<char> = (0..n).map(|j| if bits >> j & 1 == 1 { BLACK } else { WHITE }).collect();
        for s in 1..=n {
            let p = sb_from_shift(&row, s, m).expect("valid generator");
            if seen.insert(p.clone()) {
                out.push(p);
            }
        }
    }
    Some(out)
}

const SB_ENUMERATION_LIMIT: usize = 1 << 16;
/// Pictures with at most this many cells have their negatives enumerated outright.
const NEGATIVE_ENUMERATION_CELLS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Language {
    BarsStripes,
    ShiftingBits,
}

impl Language {
    pub fn name(self) -> &'static str {
        match self {
            Language::BarsStripes => "bs",
            Language::ShiftingBits => "sb",
        }
    }

    pub fn is_member(self, p: &Picture) -> Result<bool> {
        match self {
            Language::BarsStripes => bs_membership(p),
            Language::ShiftingBits => sb_membership(p),
        }
    }

    /// Regression target for Bars & Stripes, class indicator for Shifting Bits.
    pub fn label(self, p: &Picture) -> Result<f64> {
        match self {
            Language::BarsStripes => bs_target(p),
            Language::ShiftingBits => Ok(if sb_membership(p)? { 1.0 } else { 0.0 }),
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bs" | "bars-stripes" => Ok(Language::BarsStripes),
            "sb" | "shifting-bits" => Ok(Language::ShiftingBits),
            _ => Err(Error::InvalidParameter(format!("unknown language {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub picture: Picture,
    pub label: f64,
}

impl LabeledExample {
    pub fn is_positive(&self) -> bool {
        self.label > 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetMeta {
    pub generator: String,
    pub split: String,
    pub seed: u64,
    pub sizes: Vec<(usize, usize)>,
    /// Fraction of examples with a positive label.
    pub positive_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.examples.iter().filter(|e| e.is_positive()).count()
    }

    pub fn pictures(&self) -> impl Iterator<Item = &Picture> {
        self.examples.iter().map(|e| &e.picture)
    }
}

/// How a new dataset must avoid the pictures of an existing one.
#[derive(Clone, Copy, Debug)]
pub enum Exclusion<'a> {
    None,
    /// Negatives never reappear; positives may, when there are not enough of them.
    Negatives(&'a Dataset),
    /// Neither negatives nor positives reappear.
    All(&'a Dataset),
}

impl<'a> Exclusion<'a> {
    fn dataset(self) -> Option<&'a Dataset> {
        match self {
            Exclusion::None => None,
            Exclusion::Negatives(d) | Exclusion::All(d) => Some(d),
        }
    }

    fn covers_positives(self) -> bool {
        matches!(self, Exclusion::All(_))
    }
}

#[derive(Clone, Debug)]
pub struct GenerateRequest {
    pub language: Language,
    pub sizes: Vec<(usize, usize)>,
    pub count: usize,
    pub positive_fraction: f64,
    pub seed: u64,
    pub split: String,
}

/// Draws a dataset with the requested fraction of positives.
///
/// Each example's size is drawn uniformly from `sizes`. Within a size, examples are
/// distinct whenever the language has enough of them; otherwise positives (and, with
/// no exclusion in force, negatives) repeat. Bars & Stripes positives are drawn
/// uniformly from the exact enumeration, Shifting Bits positives as a uniform first
/// row with a uniform shift. Negatives are uniform random non-members.
pub fn generate_dataset(req: &GenerateRequest, exclude: Exclusion<'_>) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&req.positive_fraction) {
        return Err(Error::InvalidParameter(format!(
            "positive fraction {} outside [0, 1]",
            req.positive_fraction
        )));
    }
    if req.sizes.is_empty() {
        return Err(Error::InvalidParameter("no picture sizes given".into()));
    }
    if let Some(&(m, n)) = req.sizes.iter().find(|&&(m, n)| m == 0 || n == 0) {
        return Err(Error::InvalidParameter(format!("invalid picture size {m}x{n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let n_pos = (req.count as f64 * req.positive_fraction).round() as usize;
    let n_neg = req.count - n_pos;
    let mut pos_per_size = vec![0usize; req.sizes.len()];
    let mut neg_per_size = vec![0usize; req.sizes.len()];
    for _ in 0..n_pos {
        pos_per_size[rng.random_range(0..req.sizes.len())] += 1;
    }
    for _ in 0..n_neg {
        neg_per_size[rng.random_range(0..req.sizes.len())] += 1;
    }

    let mut examples = Vec::with_capacity(req.count);
    for (k, &(m, n)) in req.sizes.iter().enumerate() {
        let excluded = |positive: bool| -> HashSet<&Picture> {
            let Some(d) = exclude.dataset() else {
                return HashSet::new();
            };
            if positive && !exclude.covers_positives() {
                return HashSet::new();
            }
            d.examples
                .iter()
                .filter(|e| e.picture.size() == (m, n) && e.is_positive() == positive)
                .map(|e| &e.picture)
                .collect()
        };
        let sampler = Sampler {
            language: req.language,
            m,
            n,
        };
        let positives =
            sampler.positives(pos_per_size[k], &excluded(true), exclude.covers_positives(), &mut rng)?;
        let negatives =
            sampler.negatives(neg_per_size[k], &excluded(false), exclude.dataset().is_some(), &mut rng)?;
        for p in positives.into_iter().chain(negatives) {
            let label = req.language.label(&p)?;
            examples.push(LabeledExample { picture: p, label });
        }
    }
    examples.shuffle(&mut rng);

    let positives = examples.iter().filter(|e| e.is_positive()).count();
    let positive_fraction = if examples.is_empty() {
        0.0
    } else {
        positives as f64 / examples.len() as f64
    };
    Ok(Dataset {
        examples,
        meta: DatasetMeta {
            generator: req.language.name().to_string(),
            split: req.split.clone(),
            seed: req.seed,
            sizes: req.sizes.clone(),
            positive_fraction,
        },
    })
}

struct Sampler {
    language: Language,
    m: usize,
    n: usize,
}

/// Picks `k` entries of `pool`: distinct when `k <= pool.len()`, otherwise with
/// replacement (only when `strict` is false).
fn pick_from_pool(
    pool: Vec<Picture>,
    k: usize,
    strict: bool,
    what: &str,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Picture>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if k <= pool.len() {
        let mut pool = pool;
        let (chosen, _) = pool.partial_shuffle(rng, k);
        return Ok(chosen.to_vec());
    }
    if strict || pool.is_empty() {
        return Err(Error::Infeasible(format!(
            "{k} {what} requested but only {} distinct ones are available",
            pool.len()
        )));
    }
    Ok((0..k).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect())
}

impl Sampler {
    fn describe(&self, class: &str) -> String {
        format!("{} {class} of size {}x{}", self.language, self.m, self.n)
    }

    fn random_picture(&self, rng: &mut ChaCha8Rng) -> Picture {
        let cells = (0..self.m * self.n)
            .map(|_| if rng.random::<bool>() { BLACK } else { WHITE })
            .collect();
        Picture::new(self.m, self.n, cells).expect("positive size")
    }

    fn generated_positive(&self, rng: &mut ChaCha8Rng) -> Picture {
        let row: Vec<char> = (0..self.n)
            .map(|_| if rng.random::<bool>() { BLACK } else { WHITE })
            .collect();
        let shift = rng.random_range(1..=self.n);
        sb_from_shift(&row, shift, self.m).expect("valid generator")
    }

    fn positives(
        &self,
        k: usize,
        excluded: &HashSet<&Picture>,
        strict: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Picture>> {
        match self.language {
            Language::BarsStripes => {
                let pool: Vec<Picture> = bs_positives(self.m, self.n)?
                    .into_iter()
                    .filter(|p| !excluded.contains(p))
                    .collect();
                pick_from_pool(pool, k, strict, &self.describe("positives"), rng)
            }
            Language::ShiftingBits => {
                let available = sb_positives(self.m, self.n)
                    .map(|all| all.iter().filter(|p| !excluded.contains(p)).count());
                match available {
                    Some(avail) if k > avail => {
                        if strict || avail == 0 {
                            return Err(Error::Infeasible(format!(
                                "{k} {} requested but only {avail} distinct ones are available",
                                self.describe("positives")
                            )));
                        }
                        Ok((0..k).map(|_| self.generated_positive(rng)).collect())
                    }
                    _ => self.rejection(k, excluded, "positives", rng, |s, r| Some(s.generated_positive(r))),
                }
            }
        }
    }

    fn negatives(
        &self,
        k: usize,
        excluded: &HashSet<&Picture>,
        strict: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Picture>> {
        if self.m * self.n <= NEGATIVE_ENUMERATION_CELLS {
            let mut pool = Vec::new();
            for p in Picture::enumerate_binary(self.m, self.n) {
                if !self.language.is_member(&p)? && !excluded.contains(&p) {
                    pool.push(p);
                }
            }
            return pick_from_pool(pool, k, strict, &self.describe("negatives"), rng);
        }
        let language = self.language;
        self.rejection(k, excluded, "negatives", rng, |s, r| {
            let p = s.random_picture(r);
            (!language.is_member(&p).expect("binary picture")).then_some(p)
        })
    }

    /// Draws `k` distinct pictures outside `excluded` from a proposal that may decline.
    fn rejection(
        &self,
        k: usize,
        excluded: &HashSet<&Picture>,
        class: &str,
        rng: &mut ChaCha8Rng,
        propose: impl Fn(&Sampler, &mut ChaCha8Rng) -> Option<Picture>,
    ) -> Result<Vec<Picture>> {
        let mut seen: HashSet<Picture> = HashSet::with_capacity(k);
        let mut out = Vec::with_capacity(k);
        let budget = 1000 * k + 100_000;
        let mut attempts = 0;
        while out.len() < k {
            attempts += 1;
            if attempts > budget {
                return Err(Error::Infeasible(format!(
                    "could only find {} of {k} distinct {}",
                    out.len(),
                    self.describe(class)
                )));
            }
            let Some(p) = propose(self, rng) else { continue };
            if excluded.contains(&p) || seen.contains(&p) {
                continue;
            }
            seen.insert(p.clone());
            out.push(p);
        }
        Ok(out)
    }
}

fn format_sizes(sizes: &[(usize, usize)]) -> String {
    sizes
        .iter()
        .map(|(m, n)| format!("{m}x{n}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses `MxN`.
pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidParameter(format!("invalid picture size {s:?}, expected MxN"));
    let (m, n) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    let m: usize = m.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if m == 0 || n == 0 {
        return Err(bad());
    }
    Ok((m, n))
}

/// Writes a dataset in the line-oriented text format: `#` metadata lines, then per
/// example a `m n label` header followed by `m` rows of symbols.
pub fn write_dataset(d: &Dataset) -> String {
    let mut out = String::new();
    out.push_str(&format!("# generator: {}\n", d.meta.generator));
    out.push_str(&format!("# split: {}\n", d.meta.split));
    out.push_str(&format!("# seed: {}\n", d.meta.seed));
    out.push_str(&format!("# sizes: {}\n", format_sizes(&d.meta.sizes)));
    out.push_str(&format!("# count: {}\n", d.examples.len()));
    out.push_str(&format!("# positive_fraction: {}\n", d.meta.positive_fraction));
    for e in &d.examples {
        let (m, n) = e.picture.size();
        out.push_str(&format!("{m} {n} {}\n", e.label));
        out.push_str(&e.picture.to_string());
        out.push('\n');
    }
    out
}

pub fn read_dataset(text: &str, source_name: &str) -> Result<Dataset> {
    let mut meta = DatasetMeta {
        generator: String::new(),
        split: String::new(),
        seed: 0,
        sizes: Vec::new(),
        positive_fraction: 0.0,
    };
    let mut examples = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    let err = |line: usize, msg: String| Error::parse(source_name, line + 1, msg);
    while let Some((ln, raw)) = lines.next() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once(':') {
                let value = value.trim();
                match key.trim() {
                    "generator" => meta.generator = value.to_string(),
                    "split" => meta.split = value.to_string(),
                    "seed" => {
                        meta.seed = value.parse().map_err(|_| err(ln, format!("bad seed {value:?}")))?
                    }
                    "sizes" if !value.is_empty() => {
                        meta.sizes = value.split(',').map(parse_size).collect::<Result<_>>()?
                    }
                    _ => {}
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(ln, format!("expected 'm n label', got {line:?}")));
        }
        let m: usize = fields[0].parse().map_err(|_| err(ln, format!("bad height {:?}", fields[0])))?;
        let n: usize = fields[1].parse().map_err(|_| err(ln, format!("bad width {:?}", fields[1])))?;
        let label: f64 = fields[2].parse().map_err(|_| err(ln, format!("bad label {:?}", fields[2])))?;
        if m == 0 || n == 0 {
            return Err(err(ln, format!("empty picture size {m}x{n}")));
        }
        if !label.is_finite() {
            return Err(err(ln, format!("label must be finite, got {label}")));
        }
        let mut rows = Vec::with_capacity(m);
        for _ in 0..m {
            let Some((rl, row)) = lines.next() else {
                return Err(err(ln, format!("picture truncated: expected {m} rows")));
            };
            let row = row.trim();
            if row.chars().count() != n {
                return Err(err(rl, format!("expected {n} symbols, got {}", row.chars().count())));
            }
            rows.push(row.to_string());
        }
        examples.push(LabeledExample {
            picture: Picture::from_rows(&rows)?,
            label,
        });
    }
    let positives = examples.iter().filter(|e| e.is_positive()).count();
    meta.positive_fraction = if examples.is_empty() {
        0.0
    } else {
        positives as f64 / examples.len() as f64
    };
    Ok(Dataset { examples, meta })
}
