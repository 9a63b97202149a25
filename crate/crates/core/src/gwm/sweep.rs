//! Boundary-sweep contraction of the picture network and its reverse pass.
//!
//! The sweep walks the longer picture dimension. Working in a frame where the
//! picture has `m <= n` rows, columns are absorbed left to right and each column
//! top to bottom. The running state carries one leg per row (the east legs
//! crossing the current column boundary) plus the vertical bond of the cell
//! being absorbed, laid out as
//!
//! ```text
//! [new east 0..i) [vertical bond] [old east i] [old east i+1..m)
//! ```
//!
//! Border vectors are folded into the site tensors of boundary cells, so a
//! capped mode simply has extent 1. Absorbing a cell is then a batched
//! matrix product over the two middle legs, and the layout after the product is
//! already the layout the next cell expects.

use std::sync::OnceLock;

use crate::error::Result;
use crate::gwm::{GradientAccumulator, GwmModel, Side};
use crate::kernel::{batched_apply, batched_apply_backward, Batched};
use crate::picture::Picture;

const ABSORB_W: u8 = 1;
const ABSORB_N: u8 = 2;
const ABSORB_E: u8 = 4;
const ABSORB_S: u8 = 8;
const PATTERNS: usize = 16;

/// Site matrix of one (orientation, symbol, absorption pattern) triple.
///
/// Row index `(n, w)`, column index `(e, s)`; absorbed modes have extent 1.
#[derive(Debug)]
struct SiteMatrix {
    data: Vec<f64>,
    dims: [usize; 4],
}

impl SiteMatrix {
    fn k_in(&self) -> usize {
        self.dims[Side::North as usize] * self.dims[Side::West as usize]
    }

    fn k_out(&self) -> usize {
        self.dims[Side::East as usize] * self.dims[Side::South as usize]
    }
}

fn pattern_dims(d: usize, pattern: u8) -> [usize; 4] {
    let ext = |bit: u8| if pattern & bit != 0 { 1 } else { d };
    [ext(ABSORB_W), ext(ABSORB_N), ext(ABSORB_E), ext(ABSORB_S)]
}

/// Maps a frame-side to the model side it reads from. The transposed frame swaps
/// west with north and east with south.
fn model_side(transposed: bool, frame_side: usize) -> usize {
    if transposed {
        [1, 0, 3, 2][frame_side]
    } else {
        frame_side
    }
}

/// Flat offset into a model tensor for frame indices `(w, n, e, s)`.
#[inline]
fn model_offset(d: usize, transposed: bool, w: usize, n: usize, e: usize, s: usize) -> usize {
    if transposed {
        ((n * d + w) * d + s) * d + e
    } else {
        ((w * d + n) * d + e) * d + s
    }
}

/// Evaluates pictures against one model, caching the folded site matrices.
///
/// Reuse a single evaluator across a batch: site matrices are built once and
/// gradients can be accumulated at site level before being mapped back to the
/// model parameters by [`Evaluator::finish`].
pub struct Evaluator<'m> {
    model: &'m GwmModel,
    sites: Vec<OnceLock<SiteMatrix>>,
}

/// Forward intermediates recorded by [`Evaluator::forward_taped`].
#[derive(Debug)]
pub struct Tape {
    value: f64,
    rows: usize,
    cols: usize,
    /// `(site key, state before absorbing that site)` in sweep order.
    steps: Vec<(usize, Vec<f64>)>,
}

impl Tape {
    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Adjoints of the folded site matrices, accumulated over any number of pictures.
#[derive(Debug, Default)]
pub struct SiteGradients {
    by_key: Vec<Option<Vec<f64>>>,
}

struct Step {
    key: usize,
    batched: Batched,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m GwmModel) -> Self {
        let slots = 2 * model.alphabet().len() * PATTERNS;
        Evaluator {
            model,
            sites: (0..slots).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn model(&self) -> &GwmModel {
        self.model
    }

    fn key(&self, transposed: bool, symbol: usize, pattern: u8) -> usize {
        ((transposed as usize) * self.model.alphabet().len() + symbol) * PATTERNS + pattern as usize
    }

    fn decode_key(&self, key: usize) -> (bool, usize, u8) {
        let pattern = (key % PATTERNS) as u8;
        let rest = key / PATTERNS;
        let nsym = self.model.alphabet().len();
        (rest / nsym == 1, rest % nsym, pattern)
    }

    fn site(&self, key: usize) -> &SiteMatrix {
        self.sites[key].get_or_init(|| {
            let (transposed, symbol, pattern) = self.decode_key(key);
            self.build_site(transposed, symbol, pattern)
        })
    }

    /// Border factor vectors in frame order, `None` where the mode stays open.
    fn caps(&self, transposed: bool, pattern: u8) -> [Option<&[f64]>; 4] {
        let bits = [ABSORB_W, ABSORB_N, ABSORB_E, ABSORB_S];
        let borders = self.model.borders();
        [0, 1, 2, 3].map(|k| {
            (pattern & bits[k] != 0).then(|| borders[model_side(transposed, k)].data())
        })
    }

    fn build_site(&self, transposed: bool, symbol: usize, pattern: u8) -> SiteMatrix {
        let d = self.model.dim();
        let t = self.model.tensors()[symbol].data();
        let dims = pattern_dims(d, pattern);
        let [dw, dn, de, ds] = dims;
        let caps = self.caps(transposed, pattern);
        let factor = |k: usize, i: usize| caps[k].map_or(1.0, |v| v[i]);
        let keep = |k: usize, i: usize| if caps[k].is_some() { 0 } else { i };
        let mut data = vec![0.0; dn * dw * de * ds];
        for w in 0..d {
            let fw = factor(0, w);
            for n in 0..d {
                let fwn = fw * factor(1, n);
                let row = (keep(1, n) * dw + keep(0, w)) * de;
                for e in 0..d {
                    let fwne = fwn * factor(2, e);
                    let col = (row + keep(2, e)) * ds;
                    for s in 0..d {
                        let v = t[model_offset(d, transposed, w, n, e, s)];
                        data[col + keep(3, s)] += v * fwne * factor(3, s);
                    }
                }
            }
        }
        SiteMatrix { data, dims }
    }

    fn plan(&self, picture: &Picture) -> Result<(bool, usize, usize, Vec<Step>)> {
        let transposed = picture.height() > picture.width();
        let (m, n) = if transposed {
            (picture.width(), picture.height())
        } else {
            (picture.height(), picture.width())
        };
        let d = self.model.dim();
        let mut steps = Vec::with_capacity(m * n);
        for j in 0..n {
            for i in 0..m {
                let symbol = if transposed { picture.get(j, i) } else { picture.get(i, j) };
                let symbol = self.model.symbol_index(symbol)?;
                let mut pattern = 0;
                if j == 0 {
                    pattern |= ABSORB_W;
                }
                if i == 0 {
                    pattern |= ABSORB_N;
                }
                if j == n - 1 {
                    pattern |= ABSORB_E;
                }
                if i == m - 1 {
                    pattern |= ABSORB_S;
                }
                let [dw, _, de, _] = pattern_dims(d, pattern);
                steps.push(Step {
                    key: self.key(transposed, symbol, pattern),
                    batched: Batched {
                        outer: de.pow(i as u32),
                        inner: dw.pow((m - 1 - i) as u32),
                    },
                });
            }
        }
        Ok((transposed, m, n, steps))
    }

    fn run(&self, steps: &[Step], mut tape: Option<&mut Vec<(usize, Vec<f64>)>>) -> f64 {
        let mut state = vec![1.0];
        for step in steps {
            let site = self.site(step.key);
            let Batched { outer, inner } = step.batched;
            let mut out = vec![0.0; outer * site.k_out() * inner];
            batched_apply(step.batched, &site.data, site.k_in(), site.k_out(), &state, &mut out);
            let prev = std::mem::replace(&mut state, out);
            if let Some(t) = tape.as_deref_mut() {
                t.push((step.key, prev));
            }
        }
        debug_assert_eq!(state.len(), 1);
        state[0]
    }

    /// Value of the fully contracted network for `picture`.
    pub fn value(&self, picture: &Picture) -> Result<f64> {
        let (_, _, _, steps) = self.plan(picture)?;
        Ok(self.run(&steps, None))
    }

    /// Forward pass that records every intermediate state for a later reverse pass.
    pub fn forward_taped(&self, picture: &Picture) -> Result<Tape> {
        let (_, rows, cols, steps) = self.plan(picture)?;
        let mut recorded = Vec::with_capacity(steps.len());
        let value = self.run(&steps, Some(&mut recorded));
        Ok(Tape {
            value,
            rows,
            cols,
            steps: recorded,
        })
    }

    /// Propagates `seed * d(value)/d(site matrices)` for a taped picture into `grads`.
    pub fn backward(&self, tape: &Tape, seed: f64, grads: &mut SiteGradients) {
        if grads.by_key.len() < self.sites.len() {
            grads.by_key.resize_with(self.sites.len(), || None);
        }
        let d = self.model.dim();
        let m = tape.rows;
        let n = tape.cols;
        let mut adjoint = vec![seed];
        for (k, (key, input)) in tape.steps.iter().enumerate().rev() {
            let site = self.site(*key);
            let (i, j) = (k % m, k / m);
            let de = if j == n - 1 { 1 } else { d };
            let dw = if j == 0 { 1 } else { d };
            let batched = Batched {
                outer: de.pow(i as u32),
                inner: dw.pow((m - 1 - i) as u32),
            };
            let gsite = grads.by_key[*key].get_or_insert_with(|| vec![0.0; site.data.len()]);
            let mut gin = (k > 0).then(|| vec![0.0; input.len()]);
            batched_apply_backward(
                batched,
                &site.data,
                site.k_in(),
                site.k_out(),
                input,
                &adjoint,
                gin.as_deref_mut(),
                gsite,
            );
            match gin {
                Some(g) => adjoint = g,
                None => break,
            }
        }
    }

    /// Maps accumulated site-matrix adjoints back onto the model parameters.
    pub fn finish(&self, grads: &SiteGradients) -> GradientAccumulator {
        let mut out = GradientAccumulator::zeros_for(self.model);
        let d = self.model.dim();
        for (key, g) in grads.by_key.iter().enumerate() {
            let Some(g) = g else { continue };
            let (transposed, symbol, pattern) = self.decode_key(key);
            let dims = pattern_dims(d, pattern);
            let [dw, _, de, ds] = dims;
            let caps = self.caps(transposed, pattern);
            let t = self.model.tensors()[symbol].data();
            let keep = |k: usize, i: usize| if caps[k].is_some() { 0 } else { i };
            let mut gt = vec![0.0; t.len()];
            let mut gb: [Vec<f64>; 4] = [(); 4].map(|_| vec![0.0; d]);
            for w in 0..d {
                for n in 0..d {
                    let row = (keep(1, n) * dw + keep(0, w)) * de;
                    for e in 0..d {
                        let col = (row + keep(2, e)) * ds;
                        for s in 0..d {
                            let gv = g[col + keep(3, s)];
                            if gv == 0.0 {
                                continue;
                            }
                            let idx = [w, n, e, s];
                            let f: [f64; 4] = [0, 1, 2, 3].map(|k| caps[k].map_or(1.0, |v| v[idx[k]]));
                            let off = model_offset(d, transposed, w, n, e, s);
                            gt[off] += gv * f[0] * f[1] * f[2] * f[3];
                            let tv = t[off];
                            for k in 0..4 {
                                if caps[k].is_some() {
                                    let others: f64 =
                                        (0..4).filter(|&o| o != k).map(|o| f[o]).product();
                                    gb[k][idx[k]] += gv * tv * others;
                                }
                            }
                        }
                    }
                }
            }
            for (x, y) in out.tensor_mut(symbol).iter_mut().zip(&gt) {
                *x += y;
            }
            for k in 0..4 {
                if caps[k].is_some() {
                    let side = Side::ALL[model_side(transposed, k)];
                    for (x, y) in out.border_mut(side).iter_mut().zip(&gb[k]) {
                        *x += y;
                    }
                }
            }
        }
        out
    }

    /// Value and full parameter gradient for a single picture.
    pub fn gradient(&self, picture: &Picture) -> Result<(f64, GradientAccumulator)> {
        let tape = self.forward_taped(picture)?;
        let mut site_grads = SiteGradients::default();
        self.backward(&tape, 1.0, &mut site_grads);
        Ok((tape.value, self.finish(&site_grads)))
    }
}

/// Value of `model` on `picture`.
pub fn evaluate(model: &GwmModel, picture: &Picture) -> Result<f64> {
    Evaluator::new(model).value(picture)
}

/// Value of `model` on `picture` and its gradient with respect to every parameter.
pub fn gradient(model: &GwmModel, picture: &Picture) -> Result<(f64, GradientAccumulator)> {
    Evaluator::new(model).gradient(picture)
}
