//! Test oracles shared by the integration suites.

use qsched::ilp::{IlpInstance, SwapColumn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Exhaustive search in lexicographic order; returns the first optimum met,
/// which is the lexicographically smallest one.
struct Enumerator<'a> {
    inst: &'a IlpInstance<'a>,
    nt: usize,
    /// Caps that hold for any feasible point: a consumption never exceeds its
    /// demand supply, and every variable removes one ebit net.
    cap: Vec<u64>,
    produces_later: Vec<Vec<bool>>,
    best: Option<(f64, Vec<u64>)>,
    r: Vec<u64>,
}

impl<'a> Enumerator<'a> {
    fn new(inst: &'a IlpInstance<'a>) -> Self {
        let nt = inst.swaps.len();
        let nq = inst.ebit_supply.len();
        let total = inst.ebit_supply.iter().sum::<f64>().floor() as u64;
        let mut cap = vec![total; nt];
        cap.extend(inst.demand_supply.iter().map(|&u| (u.floor() as u64).min(total)));
        let dim = nt + nq;
        let produces_later = (0..=dim)
            .map(|k| {
                let mut p = vec![false; nq];
                for t in k.min(nt)..nt {
                    p[inst.swaps[t].produces] = true;
                }
                p
            })
            .collect();
        Enumerator {
            inst,
            nt,
            cap,
            produces_later,
            best: None,
            r: vec![0; dim],
        }
    }

    fn draw(&self, upto: usize) -> Vec<i64> {
        let mut d = vec![0i64; self.inst.ebit_supply.len()];
        for k in 0..upto {
            let x = self.r[k] as i64;
            if k < self.nt {
                let c = self.inst.swaps[k];
                d[c.consumes[0]] += x;
                d[c.consumes[1]] += x;
                d[c.produces] -= x;
            } else {
                d[k - self.nt] += x;
            }
        }
        d
    }

    // A queue drawn past its supply can only be rescued by a later swap
    // producing it.
    fn hopeless(&self, upto: usize) -> bool {
        self.draw(upto)
            .iter()
            .enumerate()
            .any(|(q, &d)| d as f64 > self.inst.ebit_supply[q] + 1e-9 && !self.produces_later[upto][q])
    }

    fn run(&mut self, k: usize, budget: u64) {
        if self.hopeless(k) {
            return;
        }
        if k == self.r.len() {
            if !self.inst.is_feasible(&self.r) {
                return;
            }
            let z = self.inst.objective(&self.r);
            if self.best.as_ref().is_none_or(|(bz, _)| z < *bz) {
                self.best = Some((z, self.r.clone()));
            }
            return;
        }
        for x in 0..=self.cap[k].min(budget) {
            self.r[k] = x;
            self.run(k + 1, budget - x);
        }
        self.r[k] = 0;
    }
}

pub fn brute_force(inst: &IlpInstance) -> (f64, Vec<u64>) {
    let total = inst.ebit_supply.iter().sum::<f64>().floor() as u64;
    let mut e = Enumerator::new(inst);
    e.run(0, total);
    e.best.expect("zero is feasible")
}

pub fn random_columns(rng: &mut ChaCha8Rng, nq: usize, nt: usize) -> Vec<SwapColumn> {
    (0..nt)
        .map(|_| {
            let mut idx: Vec<usize> = (0..nq).collect();
            for i in 0..3 {
                let j = rng.random_range(i..nq);
                idx.swap(i, j);
            }
            SwapColumn {
                consumes: [idx[0], idx[1]],
                produces: idx[2],
            }
        })
        .collect()
}
