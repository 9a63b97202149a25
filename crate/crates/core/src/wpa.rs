//! Weighted picture automata.
//!
//! An automaton assigns a picture the sum, over its accepted runs, of the product
//! of rule weights. A run places one rule on every cell such that the rule label
//! matches the cell, neighbouring poles agree (east = west of the right
//! neighbour, south = north of the cell below), and every outer pole lies in the
//! acceptance set of its side.
//!
//! Rules are kept as a list. Listing the same `(label, poles)` tuple twice gives
//! two distinct rules, each contributing its own runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gwm::{GwmModel, Side};
use crate::picture::{Picture, BLACK, WHITE};
use crate::tensor::DenseTensor;
use crate::textio::{symbol, toml_error};

/// Largest picture (in cells) accepted by [`Wpa::evaluate_bruteforce`].
pub const BRUTE_FORCE_CELL_LIMIT: usize = 25;

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub label: char,
    /// State indices of the `(west, north, east, south)` poles.
    pub poles: [usize; 4],
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Wpa {
    states: Vec<String>,
    alphabet: Vec<char>,
    rules: Vec<Rule>,
    /// `accept[side][state]`
    accept: [Vec<bool>; 4],
}

/// A grid of rule indices, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub height: usize,
    pub width: usize,
    pub rules: Vec<usize>,
}

impl Run {
    pub fn rule_at(&self, row: usize, col: usize) -> usize {
        self.rules[row * self.width + col]
    }

    /// Whether this run is an accepted run of `wpa` on `picture`.
    pub fn is_accepted(&self, wpa: &Wpa, picture: &Picture) -> bool {
        if (self.height, self.width) != picture.size() || self.rules.len() != self.height * self.width {
            return false;
        }
        let pole = |i: usize, j: usize, side: Side| wpa.rules[self.rule_at(i, j)].poles[side as usize];
        for i in 0..self.height {
            for j in 0..self.width {
                if wpa.rules[self.rule_at(i, j)].label != picture.get(i, j) {
                    return false;
                }
                if j + 1 < self.width && pole(i, j, Side::East) != pole(i, j + 1, Side::West) {
                    return false;
                }
                if i + 1 < self.height && pole(i, j, Side::South) != pole(i + 1, j, Side::North) {
                    return false;
                }
                let outer = [
                    (j == 0, Side::West),
                    (i == 0, Side::North),
                    (j + 1 == self.width, Side::East),
                    (i + 1 == self.height, Side::South),
                ];
                for (on_border, side) in outer {
                    if on_border && !wpa.accept[side as usize][pole(i, j, side)] {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// `delta(c)`: product of the rule weights.
    pub fn weight(&self, wpa: &Wpa) -> f64 {
        self.rules.iter().map(|&r| wpa.rules[r].weight).product()
    }
}

impl Wpa {
    /// `accept` lists state indices per side, ordered west, north, east, south.
    pub fn new(
        states: Vec<String>,
        alphabet: Vec<char>,
        rules: Vec<Rule>,
        accept: [Vec<usize>; 4],
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidParameter("automaton has no states".into()));
        }
        for (k, s) in states.iter().enumerate() {
            if states[..k].contains(s) {
                return Err(Error::InvalidParameter(format!("state {s:?} listed twice")));
            }
        }
        if alphabet.is_empty() {
            return Err(Error::InvalidParameter("automaton alphabet is empty".into()));
        }
        for (k, c) in alphabet.iter().enumerate() {
            if alphabet[..k].contains(c) {
                return Err(Error::InvalidParameter(format!("symbol '{c}' listed twice")));
            }
        }
        let q = states.len();
        for r in &rules {
            if !alphabet.contains(&r.label) {
                return Err(Error::UnknownSymbol(r.label));
            }
            if let Some(&bad) = r.poles.iter().find(|&&s| s >= q) {
                return Err(Error::InvalidParameter(format!("rule refers to state index {bad}")));
            }
        }
        let mut flags: [Vec<bool>; 4] = [(); 4].map(|_| vec![false; q]);
        for (side, list) in accept.iter().enumerate() {
            for &s in list {
                if s >= q {
                    return Err(Error::InvalidParameter(format!("acceptance set refers to state index {s}")));
                }
                flags[side][s] = true;
            }
        }
        Ok(Wpa {
            states,
            alphabet,
            rules,
            accept: flags,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn accepts(&self, side: Side, state: usize) -> bool {
        self.accept[side as usize][state]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// Same automaton with every weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Wpa {
        let mut out = self.clone();
        for r in &mut out.rules {
            r.weight *= c;
        }
        out
    }

    /// Calls `visit` on every accepted run of `picture`, by row-major backtracking.
    pub fn for_each_accepted_run(&self, picture: &Picture, mut visit: impl FnMut(&Run)) -> Result<()> {
        let (m, n) = picture.size();
        if m * n > BRUTE_FORCE_CELL_LIMIT {
            return Err(Error::TooLarge {
                cells: m * n,
                limit: BRUTE_FORCE_CELL_LIMIT,
            });
        }
        if let Some(&c) = picture.cells().iter().find(|c| !self.alphabet.contains(c)) {
            return Err(Error::UnknownSymbol(c));
        }
        let q = self.states.len();
        // a state can only sit on an inner edge if some rule can receive it there
        let mut usable = [vec![false; q], vec![false; q]];
        for r in &self.rules {
            usable[0][r.poles[Side::West as usize]] = true;
            usable[1][r.poles[Side::North as usize]] = true;
        }
        let by_label: Vec<Vec<usize>> = picture
            .cells()
            .iter()
            .map(|&c| (0..self.rules.len()).filter(|&r| self.rules[r].label == c).collect())
            .collect();

        let mut search = Search {
            wpa: self,
            m,
            n,
            by_label: &by_label,
            usable: &usable,
            run: Run {
                height: m,
                width: n,
                rules: vec![usize::MAX; m * n],
            },
        };
        search.descend(0, &mut visit);
        Ok(())
    }

    /// `f_A(p)`: sum over accepted runs of the product of their rule weights, 0 when none.
    pub fn evaluate_bruteforce(&self, picture: &Picture) -> Result<f64> {
        let mut total = 0.0;
        self.for_each_accepted_run(picture, |run| total += run.weight(self))?;
        Ok(total)
    }

    /// The equivalent model with `d = |Q|`: each symbol tensor holds the rule weights at
    /// the rule's pole indices, and each border vector is the indicator of its
    /// acceptance set.
    pub fn compile_to_gwm(&self) -> GwmModel {
        let d = self.states.len();
        let mut tensors: Vec<DenseTensor> = self.alphabet.iter().map(|_| DenseTensor::zeros(&[d; 4])).collect();
        for r in &self.rules {
            let k = self.alphabet.iter().position(|&c| c == r.label).expect("validated label");
            let idx = r.poles;
            let t = &mut tensors[k];
            let v = t.get(&idx);
            t.set(&idx, v + r.weight);
        }
        let borders = [0, 1, 2, 3].map(|side| {
            DenseTensor::vector(self.accept[side].iter().map(|&a| if a { 1.0 } else { 0.0 }).collect())
        });
        GwmModel::new(d, self.alphabet.clone(), tensors, borders).expect("shapes follow |Q|")
    }
}

struct Search<'a> {
    wpa: &'a Wpa,
    m: usize,
    n: usize,
    by_label: &'a [Vec<usize>],
    usable: &'a [Vec<bool>; 2],
    run: Run,
}

impl Search<'_> {
    fn descend(&mut self, pos: usize, visit: &mut impl FnMut(&Run)) {
        if pos == self.m * self.n {
            visit(&self.run);
            return;
        }
        let (i, j) = (pos / self.n, pos % self.n);
        let west = (j > 0).then(|| self.wpa.rules[self.run.rules[pos - 1]].poles[Side::East as usize]);
        let north =
            (i > 0).then(|| self.wpa.rules[self.run.rules[pos - self.n]].poles[Side::South as usize]);
        for &r in &self.by_label[pos] {
            let [w, nn, e, s] = self.wpa.rules[r].poles;
            let ok_w = match west {
                Some(x) => x == w,
                None => self.wpa.accept[Side::West as usize][w],
            };
            let ok_n = match north {
                Some(x) => x == nn,
                None => self.wpa.accept[Side::North as usize][nn],
            };
            let ok_e = if j + 1 == self.n {
                self.wpa.accept[Side::East as usize][e]
            } else {
                self.usable[0][e]
            };
            let ok_s = if i + 1 == self.m {
                self.wpa.accept[Side::South as usize][s]
            } else {
                self.usable[1][s]
            };
            if ok_w && ok_n && ok_e && ok_s {
                self.run.rules[pos] = r;
                self.descend(pos + 1, visit);
            }
        }
    }
}

/// State names of the Bars & Stripes automaton.
pub const BS_STATES: [&str; 6] = ["q0", "qa_right", "qa_down", "qb_right", "qb_down", "qf"];

/// The six-state automaton whose support is Bars & Stripes.
///
/// Four pole diagrams (a horizontal, a vertical, b horizontal, b vertical) are each
/// expanded into every combination of their pole sets, all with weight 1. The
/// value is 2 on constant pictures, 1 on other members and 0 elsewhere.
pub fn bars_stripes_automaton() -> Wpa {
    let [q0, qa_r, qa_d, qb_r, qb_d, qf] = [0, 1, 2, 3, 4, 5];
    // (label, west, north, east, south)
    let diagrams: [(char, &[usize], &[usize], &[usize], &[usize]); 4] = [
        (WHITE, &[q0, qa_r], &[q0, qa_r, qb_r], &[qf, qa_r], &[qf, qa_r]),
        (WHITE, &[q0, qa_d, qb_d], &[q0, qa_d], &[qf, qa_d], &[qf, qa_d]),
        (BLACK, &[q0, qb_r], &[q0, qa_r, qb_r], &[qf, qb_r], &[qf, qb_r]),
        (BLACK, &[q0, qb_d, qa_d], &[q0, qb_d], &[qf, qb_d], &[qf, qb_d]),
    ];
    let mut rules = Vec::new();
    for (label, ws, ns, es, ss) in diagrams {
        for &w in ws {
            for &n in ns {
                for &e in es {
                    for &s in ss {
                        rules.push(Rule {
                            label,
                            poles: [w, n, e, s],
                            weight: 1.0,
                        });
                    }
                }
            }
        }
    }
    Wpa::new(
        BS_STATES.iter().map(|s| s.to_string()).collect(),
        vec![WHITE, BLACK],
        rules,
        [vec![q0], vec![q0], vec![qf], vec![qf]],
    )
    .expect("well-formed automaton")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WpaFile {
    states: Vec<String>,
    alphabet: Vec<String>,
    accept_w: Vec<String>,
    accept_n: Vec<String>,
    accept_e: Vec<String>,
    accept_s: Vec<String>,
    rules: Vec<(String, String, String, String, String, f64)>,
}

/// Serialises an automaton as TOML with `states`, `alphabet`, `accept_{w,n,e,s}` and
/// `rules` as `[label, west, north, east, south, weight]` rows.
pub fn save(wpa: &Wpa) -> String {
    let names = |side: usize| -> Vec<String> {
        (0..wpa.states.len())
            .filter(|&s| wpa.accept[side][s])
            .map(|s| wpa.states[s].clone())
            .collect()
    };
    let st = |i: usize| wpa.states[i].clone();
    let file = WpaFile {
        states: wpa.states.clone(),
        alphabet: wpa.alphabet.iter().map(|c| c.to_string()).collect(),
        accept_w: names(0),
        accept_n: names(1),
        accept_e: names(2),
        accept_s: names(3),
        rules: wpa
            .rules
            .iter()
            .map(|r| {
                let [w, n, e, s] = r.poles;
                (r.label.to_string(), st(w), st(n), st(e), st(s), r.weight)
            })
            .collect(),
    };
    toml::to_string(&file).expect("automaton serialises")
}

pub fn load(text: &str, source_name: &str) -> Result<Wpa> {
    let file: WpaFile = toml::from_str(text).map_err(|e| toml_error(source_name, text, e))?;
    let state = |field: &str, name: &str| -> Result<usize> {
        file.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::parse(source_name, 0, format!("{field}: unknown state {name:?}")))
    };
    let alphabet = file
        .alphabet
        .iter()
        .map(|s| symbol(source_name, "alphabet", s))
        .collect::<Result<Vec<char>>>()?;
    let accept_list = |field: &str, names: &[String]| -> Result<Vec<usize>> {
        names.iter().map(|n| state(field, n)).collect()
    };
    let accept = [
        accept_list("accept_w", &file.accept_w)?,
        accept_list("accept_n", &file.accept_n)?,
        accept_list("accept_e", &file.accept_e)?,
        accept_list("accept_s", &file.accept_s)?,
    ];
    let mut rules = Vec::with_capacity(file.rules.len());
    for (k, (label, w, n, e, s, weight)) in file.rules.iter().enumerate() {
        let field = format!("rules[{k}]");
        rules.push(Rule {
            label: symbol(source_name, &field, label)?,
            poles: [
                state(&field, w)?,
                state(&field, n)?,
                state(&field, e)?,
                state(&field, s)?,
            ],
            weight: *weight,
        });
    }
    Wpa::new(file.states.clone(), alphabet, rules, accept)
}
