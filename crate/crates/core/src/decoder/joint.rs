//! Joint successive-cancellation decoding of several codewords that share
//! information bits.
//!
//! One SC decoder runs per codeword. A decoder advances through its frozen
//! positions on its own and stops at each shared variable until every
//! decoder holding that variable has reached it; the variable is then
//! decided from the sum of their leaf LLRs and committed to all of them.
//! When the codewords list their shared variables in the same relative
//! order this never stalls. Otherwise the stalled variable with the most
//! confident partial sum is decided from the LLRs collected so far.

use crate::error::{invalid, Result};
use crate::llr::{hard_decision, sat_add};
use crate::polar::CodeSpec;

use super::ScDecoder;
use crate::llr::CheckNode;

/// One codeword of a joint decode.
#[derive(Debug, Clone, Copy)]
pub struct JointCodeword<'a> {
    pub llrs: &'a [f64],
    pub spec: &'a CodeSpec,
    /// Variable carried by each position; `None` exactly on frozen positions.
    pub vars: &'a [Option<usize>],
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointResult {
    /// Decided value of each variable.
    pub values: Vec<u8>,
    /// Decision vector of each codeword.
    pub u_hat: Vec<Vec<u8>>,
    /// Sum over frozen and forced positions of `|λ|` where the sign disagreed.
    pub path_metric: f64,
    /// Variables decided without the LLRs of every holder.
    pub forced: usize,
}

#[derive(Debug, Clone, Default)]
pub struct JointScDecoder {
    check_node: CheckNode,
    decoders: Vec<ScDecoder>,
}

struct Walker {
    n: u32,
    pos: usize,
    /// Leaf LLR of the variable this decoder waits on.
    pending: Option<f64>,
}

impl JointScDecoder {
    pub fn new(check_node: CheckNode) -> Self {
        JointScDecoder {
            check_node,
            decoders: Vec::new(),
        }
    }

    /// Decodes all codewords; `priors[v]` is added to the decision LLR of
    /// variable `v`.
    pub fn decode(&mut self, words: &[JointCodeword<'_>], var_count: usize, priors: Option<&[f64]>) -> Result<JointResult> {
        if priors.is_some_and(|p| p.len() != var_count) {
            return invalid("one prior per variable is required");
        }
        let mut holders = vec![0usize; var_count];
        for w in words {
            if w.llrs.len() != w.spec.len() || w.vars.len() != w.spec.len() {
                return invalid("codeword, code and variable map lengths differ");
            }
            for (i, v) in w.vars.iter().enumerate() {
                match *v {
                    Some(_) if w.spec.is_frozen(i) => return invalid(format!("frozen position {i} carries a variable")),
                    None if !w.spec.is_frozen(i) => return invalid(format!("information position {i} has no variable")),
                    Some(v) if v >= var_count => return invalid(format!("variable {v} out of range")),
                    Some(v) => holders[v] += 1,
                    None => {}
                }
            }
        }
        while self.decoders.len() < words.len() {
            self.decoders.push(ScDecoder::new(self.check_node));
        }

        let mut walkers = Vec::with_capacity(words.len());
        for (d, w) in words.iter().enumerate() {
            let n = self.decoders[d].begin(w.llrs)?;
            walkers.push(Walker { n, pos: 0, pending: None });
        }
        let mut values: Vec<Option<u8>> = vec![None; var_count];
        let mut sums = vec![0.0; var_count];
        let mut waiting: Vec<Vec<usize>> = vec![Vec::new(); var_count];
        let mut u_hat: Vec<Vec<u8>> = words.iter().map(|w| vec![0; w.spec.len()]).collect();
        let mut metric = 0.0;
        let mut forced = 0;
        let mut stack: Vec<usize> = (0..words.len()).rev().collect();

        loop {
            while let Some(d) = stack.pop() {
                let w = &words[d];
                let dec = &mut self.decoders[d];
                let walker = &mut walkers[d];
                while walker.pos < w.spec.len() {
                    let i = walker.pos;
                    let lam = walker.pending.take().unwrap_or_else(|| dec.leaf_llr(walker.n, i));
                    let bit = match w.vars[i] {
                        None => Some(w.spec.frozen_value(i)),
                        Some(v) => values[v],
                    };
                    let bit = match bit {
                        Some(b) => {
                            if hard_decision(lam) != b && lam != 0.0 {
                                metric = sat_add(metric, lam.abs());
                            }
                            b
                        }
                        None => {
                            let v = w.vars[i].unwrap();
                            sums[v] = sat_add(sums[v], lam);
                            waiting[v].push(d);
                            walker.pending = Some(lam);
                            if waiting[v].len() == holders[v] {
                                let total = sat_add(sums[v], priors.map_or(0.0, |p| p[v]));
                                values[v] = Some(hard_decision(total));
                                stack.append(&mut waiting[v]);
                            }
                            break;
                        }
                    };
                    u_hat[d][i] = bit;
                    dec.commit(walker.n, i, bit);
                    walker.pos += 1;
                }
            }
            // stalled or finished
            let stalled = (0..var_count)
                .filter(|&v| values[v].is_none() && !waiting[v].is_empty())
                .max_by(|&a, &b| {
                    let conf = |v: usize| sat_add(sums[v], priors.map_or(0.0, |p| p[v])).abs();
                    conf(a).total_cmp(&conf(b)).then(b.cmp(&a))
                });
            match stalled {
                None => break,
                Some(v) => {
                    values[v] = Some(hard_decision(sat_add(sums[v], priors.map_or(0.0, |p| p[v]))));
                    forced += 1;
                    stack.append(&mut waiting[v]);
                }
            }
        }
        let values = values.into_iter().map(|v| v.unwrap_or(0)).collect();
        Ok(JointResult {
            values,
            u_hat,
            path_metric: metric,
            forced,
        })
    }
}
