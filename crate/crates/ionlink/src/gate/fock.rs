//! Multimode Fock states over (spatial port, frequency) modes.
//!
//! A state is a map from occupied-mode multisets to the amplitude of the
//! corresponding normalized Fock basis vector.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::quantum::{c, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Freq {
    Blue,
    Red,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub port: u8,
    pub freq: Freq,
}

impl Mode {
    pub fn new(port: u8, freq: Freq) -> Self {
        Mode { port, freq }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct FockState {
    terms: BTreeMap<Vec<Mode>, C64>,
}

fn factorial_sqrt(key: &[Mode]) -> f64 {
    let mut f = 1.0;
    let mut i = 0;
    while i < key.len() {
        let mut j = i;
        while j < key.len() && key[j] == key[i] {
            j += 1;
        }
        for k in 2..=(j - i) {
            f *= k as f64;
        }
        i = j;
    }
    f.sqrt()
}

impl FockState {
    pub fn vacuum() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Vec::new(), c(1.0, 0.0));
        FockState { terms }
    }

    /// Adds `amp` times the normalized Fock vector with the given occupied modes.
    pub fn add(&mut self, modes: &[Mode], amp: C64) {
        let mut key = modes.to_vec();
        key.sort();
        *self.terms.entry(key).or_insert(c(0.0, 0.0)) += amp;
    }

    pub fn with(modes: &[Mode], amp: C64) -> Self {
        let mut s = FockState::default();
        s.add(modes, amp);
        s
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Mode>, &C64)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, modes: &[Mode]) -> C64 {
        let mut key = modes.to_vec();
        key.sort();
        self.terms.get(&key).copied().unwrap_or(c(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// Drops terms with negligible amplitude.
    pub fn pruned(mut self, eps: f64) -> Self {
        self.terms.retain(|_, a| a.norm() > eps);
        self
    }

    /// 50:50 beamsplitter from ports 1, 2 to ports 3, 4.
    ///
    /// Mode relations `a₃ = (a₁ − a₂)/√2`, `a₄ = (a₁ + a₂)/√2`, i.e.
    /// `a₁† = (a₃† + a₄†)/√2`, `a₂† = (a₄† − a₃†)/√2`, per frequency.
    pub fn beamsplitter(&self) -> FockState {
        let h = FRAC_1_SQRT_2;
        let mut ops: BTreeMap<Vec<Mode>, C64> = BTreeMap::new();
        for (key, &amp) in &self.terms {
            // Amplitude of the operator monomial.
            let mono = amp / factorial_sqrt(key);
            let mut partial: Vec<(Vec<Mode>, f64)> = vec![(Vec::new(), 1.0)];
            for m in key {
                let images: Vec<(Mode, f64)> = match m.port {
                    1 => vec![(Mode::new(3, m.freq), h), (Mode::new(4, m.freq), h)],
                    2 => vec![(Mode::new(3, m.freq), -h), (Mode::new(4, m.freq), h)],
                    _ => vec![(*m, 1.0)],
                };
                partial = partial
                    .into_iter()
                    .flat_map(|(k, w)| {
                        images.iter().map(move |&(img, f)| {
                            let mut k2 = k.clone();
                            k2.push(img);
                            (k2, w * f)
                        })
                    })
                    .collect();
            }
            for (mut k, w) in partial {
                k.sort();
                *ops.entry(k).or_insert(c(0.0, 0.0)) += mono * w;
            }
        }
        let terms = ops
            .into_iter()
            .map(|(k, a)| {
                let f = factorial_sqrt(&k);
                (k, a * f)
            })
            .collect();
        FockState { terms }.pruned(1e-15)
    }

    /// Weight of terms with at least one photon in each of two ports.
    pub fn coincidence_probability(&self, p: u8, q: u8) -> f64 {
        self.terms
            .iter()
            .filter(|(k, _)| k.iter().any(|m| m.port == p) && k.iter().any(|m| m.port == q))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}
