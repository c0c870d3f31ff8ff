//! Successive-cancellation decoding on the natural-order polar tree.
//!
//! Depth `d` holds `N >> d` LLRs; depth 0 is the channel and depth `n` a
//! single leaf. Bit `i` branches right at depth `n - 1 - tz(i)`, where only a
//! g-update is needed before descending with f-updates.

use crate::error::{invalid, Result};
use crate::llr::{g_hard, hard_decision, is_infinite, sat_add, CheckNode, LLR_INF};
use crate::polar::{log2_exact, CodeSpec};

use super::{DecodeResult, Priors};

/// SC decoder with owned scratch buffers, sized on first use.
#[derive(Debug, Clone, Default)]
pub struct ScDecoder {
    check_node: CheckNode,
    llr: Vec<Vec<f64>>,
    left: Vec<Vec<u8>>,
    right: Vec<Vec<u8>>,
    soft_left: Vec<Vec<f64>>,
    soft_right: Vec<Vec<f64>>,
}

/// How one leaf is settled during a decode pass.
#[derive(Clone, Copy)]
enum Leaf {
    Known(u8),
    Free(f64),
}

impl ScDecoder {
    pub fn new(check_node: CheckNode) -> Self {
        ScDecoder {
            check_node,
            ..Default::default()
        }
    }

    pub fn check_node(&self) -> CheckNode {
        self.check_node
    }

    fn prepare(&mut self, len: usize) -> Result<u32> {
        let n = log2_exact(len)?;
        if self.llr.len() != n as usize + 1 || self.llr[0].len() != len {
            self.llr = (0..=n).map(|d| vec![0.0; len >> d]).collect();
            self.left = (0..=n).map(|d| vec![0; len >> d]).collect();
            self.right = (0..=n).map(|d| vec![0; len >> d]).collect();
            self.soft_left = (0..=n).map(|d| vec![0.0; len >> d]).collect();
            self.soft_right = (0..=n).map(|d| vec![0.0; len >> d]).collect();
        }
        Ok(n)
    }

    /// Leaf LLR of bit `i`, assuming partial sums up to `i - 1` are in place.
    fn descend(&mut self, n: u32, i: usize, soft: bool) -> f64 {
        let n = n as usize;
        let start = if i == 0 {
            0
        } else {
            let a = n - 1 - i.trailing_zeros() as usize;
            let (parents, children) = self.llr.split_at_mut(a + 1);
            let parent = &parents[a];
            let child = &mut children[0];
            let m = child.len();
            if soft {
                let sums = &self.soft_left[a + 1];
                let cn = self.check_node;
                for k in 0..m {
                    child[k] = sat_add(parent[k + m], cn.combine(parent[k], sums[k]));
                }
            } else {
                let sums = &self.left[a + 1];
                for k in 0..m {
                    child[k] = g_hard(parent[k], parent[k + m], sums[k]);
                }
            }
            a + 1
        };
        let cn = self.check_node;
        for d in start..n {
            let (parents, children) = self.llr.split_at_mut(d + 1);
            let parent = &parents[d];
            let child = &mut children[0];
            let m = child.len();
            for k in 0..m {
                child[k] = cn.combine(parent[k], parent[k + m]);
            }
        }
        self.llr[n][0]
    }

    /// Pushes the decision for leaf `i` up through the partial-sum buffers.
    fn update_sums(&mut self, n: u32, i: usize, bit: u8) {
        let mut d = n as usize;
        if i & 1 == 0 {
            self.left[d][0] = bit;
            return;
        }
        self.right[d][0] = bit;
        let mut node = i;
        while d > 1 {
            let parent = node >> 1;
            let (lu, ld) = self.left.split_at_mut(d);
            let (ru, rd) = self.right.split_at_mut(d);
            let (l, r) = (&ld[0], &rd[0]);
            let m = l.len();
            let target = if parent & 1 == 0 { &mut lu[d - 1] } else { &mut ru[d - 1] };
            for k in 0..m {
                target[k] = l[k] ^ r[k];
                target[k + m] = r[k];
            }
            if parent & 1 == 0 {
                return;
            }
            node = parent;
            d -= 1;
        }
    }

    /// Soft counterpart of [`update_sums`](Self::update_sums). A finished
    /// node returns the extrinsic estimate of its code bits: combining its
    /// children's estimates with the LLRs that entered the node, so nothing a
    /// node received from above is fed back into it.
    fn update_soft_sums(&mut self, n: u32, i: usize, value: f64) {
        let mut d = n as usize;
        if i & 1 == 0 {
            self.soft_left[d][0] = value;
            return;
        }
        self.soft_right[d][0] = value;
        let cn = self.check_node;
        let mut node = i;
        while d > 1 {
            let parent = node >> 1;
            let (lu, ld) = self.soft_left.split_at_mut(d);
            let (ru, rd) = self.soft_right.split_at_mut(d);
            let (l, r) = (&ld[0], &rd[0]);
            let input = &self.llr[d - 1];
            let m = l.len();
            let target = if parent & 1 == 0 { &mut lu[d - 1] } else { &mut ru[d - 1] };
            for k in 0..m {
                target[k] = cn.combine(l[k], sat_add(r[k], input[k + m]));
                target[k + m] = sat_add(r[k], cn.combine(l[k], input[k]));
            }
            if parent & 1 == 0 {
                return;
            }
            node = parent;
            d -= 1;
        }
    }

    /// Loads channel LLRs for a stepped decode; returns the tree depth.
    pub(crate) fn begin(&mut self, llrs: &[f64]) -> Result<u32> {
        let n = self.prepare(llrs.len())?;
        self.llr[0].copy_from_slice(llrs);
        Ok(n)
    }

    /// Leaf LLR of bit `i` in a stepped decode; bits `0..i` are committed.
    pub(crate) fn leaf_llr(&mut self, n: u32, i: usize) -> f64 {
        self.descend(n, i, false)
    }

    pub(crate) fn commit(&mut self, n: u32, i: usize, bit: u8) {
        if i + 1 < 1 << n {
            self.update_sums(n, i, bit);
        }
    }

    fn run<F>(&mut self, llrs: &[f64], mut settle: F) -> Result<Vec<u8>>
    where
        F: FnMut(usize, f64) -> u8,
    {
        let n = self.prepare(llrs.len())?;
        self.llr[0].copy_from_slice(llrs);
        let len = llrs.len();
        let mut u = vec![0u8; len];
        for i in 0..len {
            let lam = self.descend(n, i, false);
            let bit = settle(i, lam);
            u[i] = bit;
            if i + 1 < len {
                self.update_sums(n, i, bit);
            }
        }
        Ok(u)
    }

    /// Standard SC decode. Hard priors (magnitude at least [`LLR_INF`]) fix
    /// the bit like a frozen position; soft priors are added to the decision
    /// LLR before thresholding.
    pub fn decode(&mut self, llrs: &[f64], spec: &CodeSpec, priors: Option<&Priors>) -> Result<DecodeResult> {
        check_lengths(llrs, spec, priors)?;
        let mut metric = 0.0;
        let u_hat = self.run(llrs, |i, lam| {
            let (bit, lam) = match leaf_rule(spec, priors, i, lam) {
                Leaf::Known(b) => (b, lam),
                Leaf::Free(l) => (hard_decision(l), l),
            };
            if hard_decision(lam) != bit && lam != 0.0 {
                metric = sat_add(metric, lam.abs());
            }
            bit
        })?;
        DecodeResult::from_u(u_hat, spec, true, metric, 1)
    }

    /// Genie-aided pass: partial sums use the true bits `u_true` and the
    /// returned flags mark indices whose own decision would be wrong.
    pub fn genie_errors(&mut self, llrs: &[f64], u_true: &[u8]) -> Result<Vec<bool>> {
        Ok(self.path_llrs(llrs, u_true)?.into_iter().zip(u_true).map(|(l, &u)| hard_decision(l) != u).collect())
    }

    /// Leaf LLRs along the decision path `u`: the channel-only LLR of bit `i`
    /// given `u[..i]`, with no prior added.
    pub fn path_llrs(&mut self, llrs: &[f64], u: &[u8]) -> Result<Vec<f64>> {
        if u.len() != llrs.len() {
            return invalid("path needs one bit per position");
        }
        let mut out = vec![0.0; llrs.len()];
        self.run(llrs, |i, lam| {
            out[i] = lam;
            u[i]
        })?;
        Ok(out)
    }

    /// Soft pass: no bit is decided. Information bits without a hard prior
    /// enter with their soft prior (0 when absent), frozen and hard-prior bits
    /// as certain, and partial sums are replaced by extrinsic code-bit
    /// estimates combined with the f-rule. Returns the decision LLR of every
    /// index without its own prior, the estimate used for cross-stage
    /// combining.
    pub fn soft_pass(&mut self, llrs: &[f64], spec: &CodeSpec, priors: Option<&Priors>) -> Result<Vec<f64>> {
        check_lengths(llrs, spec, priors)?;
        let n = self.prepare(llrs.len())?;
        self.llr[0].copy_from_slice(llrs);
        let len = llrs.len();
        let mut out = vec![0.0; len];
        for i in 0..len {
            let lam = self.descend(n, i, true);
            out[i] = lam;
            let value = match leaf_rule(spec, priors, i, 0.0) {
                Leaf::Known(b) => {
                    if b == 0 {
                        LLR_INF
                    } else {
                        -LLR_INF
                    }
                }
                Leaf::Free(_) => priors.map_or(0.0, |p| p.get(i)),
            };
            if i + 1 < len {
                self.update_soft_sums(n, i, value);
            }
        }
        Ok(out)
    }
}

fn check_lengths(llrs: &[f64], spec: &CodeSpec, priors: Option<&Priors>) -> Result<()> {
    if llrs.len() != spec.len() {
        return invalid(format!("{} LLRs for a length-{} code", llrs.len(), spec.len()));
    }
    if let Some(p) = priors {
        if p.len() != spec.len() {
            return invalid(format!("{} priors for a length-{} code", p.len(), spec.len()));
        }
    }
    Ok(())
}

#[inline]
fn leaf_rule(spec: &CodeSpec, priors: Option<&Priors>, i: usize, lam: f64) -> Leaf {
    if spec.is_frozen(i) {
        return Leaf::Known(spec.frozen_value(i));
    }
    match priors.map(|p| p.get(i)) {
        Some(p) if is_infinite(p) => Leaf::Known(u8::from(p < 0.0)),
        Some(p) => Leaf::Free(sat_add(lam, p)),
        None => Leaf::Free(lam),
    }
}
