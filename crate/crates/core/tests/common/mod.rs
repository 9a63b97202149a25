#![allow(dead_code)]

use gwm_core::gwm::{GwmModel, Side};
use gwm_core::Picture;

/// Value of the picture network by summing the product of all site and border
/// entries over every assignment of the bond indices.
///
/// Horizontal bond `(i, j)` joins cell `(i, j)` east to `(i, j + 1)` west; vertical
/// bond `(i, j)` joins cell `(i, j)` south to `(i + 1, j)` north. Returns the sum and
/// the sum of absolute terms.
pub fn naive_value(model: &GwmModel, p: &Picture) -> (f64, f64) {
    let (m, n) = p.size();
    let d = model.dim();
    let h_bonds = m * (n - 1);
    let v_bonds = (m - 1) * n;
    let total = h_bonds + v_bonds;
    let border = |side: Side, k: usize| model.border(side).data()[k];

    // each cell's tensor with its boundary modes already summed against the borders,
    // indexed by the bond slots (or None on a boundary) for west, north, east, south
    let mut cells = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let t = model.tensor(p.get(i, j)).unwrap();
            let slots = [
                (j > 0).then(|| i * (n - 1) + j - 1),
                (i > 0).then(|| h_bonds + (i - 1) * n + j),
                (j + 1 < n).then(|| i * (n - 1) + j),
                (i + 1 < m).then(|| h_bonds + i * n + j),
            ];
            let ext: Vec<usize> = slots.iter().map(|s| if s.is_some() { d } else { 1 }).collect();
            let mut folded = vec![0.0; ext.iter().product()];
            for w in 0..d {
                for nn in 0..d {
                    for e in 0..d {
                        for s in 0..d {
                            let mut x = t.get(&[w, nn, e, s]);
                            if j == 0 {
                                x *= border(Side::West, w);
                            }
                            if i == 0 {
                                x *= border(Side::North, nn);
                            }
                            if j == n - 1 {
                                x *= border(Side::East, e);
                            }
                            if i == m - 1 {
                                x *= border(Side::South, s);
                            }
                            let at = |k: usize, v: usize| if slots[k].is_some() { v } else { 0 };
                            let flat = ((at(0, w) * ext[1] + at(1, nn)) * ext[2] + at(2, e)) * ext[3] + at(3, s);
                            folded[flat] += x;
                        }
                    }
                }
            }
            cells.push((slots, ext, folded));
        }
    }

    let mut idx = vec![0usize; total];
    let mut sum = 0.0;
    let mut abs = 0.0;
    loop {
        let mut term = 1.0;
        for (slots, ext, folded) in &cells {
            let mut flat = 0;
            for k in 0..4 {
                flat = flat * ext[k] + slots[k].map_or(0, |b| idx[b]);
            }
            term *= folded[flat];
        }
        sum += term;
        abs += term.abs();
        let mut k = 0;
        loop {
            if k == total {
                return (sum, abs);
            }
            idx[k] += 1;
            if idx[k] < d {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Central finite differences of `f` with respect to every model parameter, in
/// [`GwmModel::parameters`] order.
pub fn finite_difference(model: &GwmModel, step: f64, f: impl Fn(&GwmModel) -> f64) -> Vec<f64> {
    let count = model.parameter_count();
    let mut out = Vec::with_capacity(count);
    let mut probe = model.clone();
    for k in 0..count {
        let original = nth_param(&probe, k);
        set_nth_param(&mut probe, k, original + step);
        let up = f(&probe);
        set_nth_param(&mut probe, k, original - step);
        let down = f(&probe);
        set_nth_param(&mut probe, k, original);
        out.push((up - down) / (2.0 * step));
    }
    out
}

fn nth_param(model: &GwmModel, k: usize) -> f64 {
    *model.parameters().flatten().nth(k).unwrap()
}

fn set_nth_param(model: &mut GwmModel, k: usize, value: f64) {
    *model.parameters_mut().flatten().nth(k).unwrap() = value;
}

/// `max_i |a_i - b_i| / max_i |b_i|`.
pub fn normwise_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Every binary picture with at most `max_h` rows and `max_w` columns.
pub fn all_pictures(max_h: usize, max_w: usize) -> Vec<Picture> {
    let mut out = Vec::new();
    for m in 1..=max_h {
        for n in 1..=max_w {
            out.extend(Picture::enumerate_binary(m, n));
        }
    }
    out
}
