//! Successive-cancellation list decoding.
//!
//! Every path addresses one LLR array and one partial-sum array per tree
//! depth. Arrays are shared between paths after a fork and reference counted;
//! each update overwrites an array completely, so a shared array is replaced
//! by a fresh one instead of being copied.

use crate::error::{invalid, Result};
use crate::llr::{g_hard, hard_decision, is_infinite, sat_add, CheckNode};
use crate::polar::{extract_message, log2_exact, CodeSpec};

use super::{CrcSpec, DecodeResult, Priors};

/// A surviving codeword hypothesis at the end of a list decode.
#[derive(Debug, Clone, PartialEq)]
pub struct ListCandidate {
    pub u_hat: Vec<u8>,
    pub metric: f64,
}

#[derive(Debug, Clone)]
struct Path {
    llr: Vec<usize>,
    sums: Vec<usize>,
    metric: f64,
}

#[derive(Debug, Clone, Default)]
struct Pool<T> {
    arrays: Vec<Vec<T>>,
    refs: Vec<u32>,
    free: Vec<usize>,
}

impl<T: Clone + Default> Pool<T> {
    fn new(count: usize, len: usize) -> Self {
        Pool {
            arrays: vec![vec![T::default(); len]; count],
            refs: vec![0; count],
            free: (0..count).rev().collect(),
        }
    }

    fn reset(&mut self) {
        self.refs.iter_mut().for_each(|r| *r = 0);
        self.free = (0..self.arrays.len()).rev().collect();
    }

    fn alloc(&mut self) -> usize {
        let id = self.free.pop().expect("pool sized to the list size");
        self.refs[id] = 1;
        id
    }

    fn retain(&mut self, id: usize) {
        self.refs[id] += 1;
    }

    fn release(&mut self, id: usize) {
        self.refs[id] -= 1;
        if self.refs[id] == 0 {
            self.free.push(id);
        }
    }

    /// Returns an exclusively owned array id in place of `id`.
    fn writable(&mut self, id: usize) -> usize {
        if self.refs[id] == 1 {
            id
        } else {
            self.refs[id] -= 1;
            self.alloc()
        }
    }
}

/// List decoder with scratch sized for one `(N, max_list)` pair at a time.
#[derive(Debug, Clone)]
pub struct SclDecoder {
    check_node: CheckNode,
    max_list: usize,
    len: usize,
    capacity: usize,
    channel: Vec<f64>,
    llr: Vec<Pool<f64>>,
    sums: Vec<Pool<u8>>,
    scratch: Vec<Vec<u8>>,
}

impl SclDecoder {
    pub fn new(check_node: CheckNode, max_list: usize) -> Result<Self> {
        if max_list == 0 || !max_list.is_power_of_two() {
            return invalid(format!("list size {max_list} must be a power of two"));
        }
        Ok(SclDecoder {
            check_node,
            max_list,
            len: 0,
            capacity: 0,
            channel: Vec::new(),
            llr: Vec::new(),
            sums: Vec::new(),
            scratch: Vec::new(),
        })
    }

    pub fn max_list(&self) -> usize {
        self.max_list
    }

    fn prepare(&mut self, len: usize, list: usize) -> Result<u32> {
        let n = log2_exact(len)?;
        if self.len != len || self.capacity < list {
            self.len = len;
            self.capacity = list.max(self.capacity);
            let cap = self.capacity;
            self.channel = vec![0.0; len];
            self.llr = (0..=n).map(|d| Pool::new(if d == 0 { 0 } else { cap }, len >> d)).collect();
            self.sums = (0..=n).map(|d| Pool::new(if d == 0 { 0 } else { cap }, len >> d)).collect();
            self.scratch = (0..=n).map(|d| vec![0; len >> d]).collect();
        }
        self.llr.iter_mut().for_each(Pool::reset);
        self.sums.iter_mut().for_each(Pool::reset);
        Ok(n)
    }

    /// Leaf LLR for bit `i` on path `p`.
    fn descend(&mut self, n: usize, i: usize, path: &mut Path) -> f64 {
        let cn = self.check_node;
        let start = if i == 0 {
            0
        } else {
            let a = n - 1 - i.trailing_zeros() as usize;
            let dst = self.llr[a + 1].writable(path.llr[a + 1]);
            path.llr[a + 1] = dst;
            let sums = &self.sums[a + 1].arrays[path.sums[a + 1]];
            let (parents, children) = self.llr.split_at_mut(a + 1);
            let parent: &[f64] = if a == 0 {
                &self.channel
            } else {
                &parents[a].arrays[path.llr[a]]
            };
            let child = &mut children[0].arrays[dst];
            let m = child.len();
            for k in 0..m {
                child[k] = g_hard(parent[k], parent[k + m], sums[k]);
            }
            a + 1
        };
        for d in start..n {
            let dst = self.llr[d + 1].writable(path.llr[d + 1]);
            path.llr[d + 1] = dst;
            let (parents, children) = self.llr.split_at_mut(d + 1);
            let parent: &[f64] = if d == 0 {
                &self.channel
            } else {
                &parents[d].arrays[path.llr[d]]
            };
            let child = &mut children[0].arrays[dst];
            let m = child.len();
            for k in 0..m {
                child[k] = cn.combine(parent[k], parent[k + m]);
            }
        }
        self.llr[n].arrays[path.llr[n]][0]
    }

    fn update_sums(&mut self, n: usize, i: usize, bit: u8, path: &mut Path) {
        let mut d = n;
        if i & 1 == 0 {
            let id = self.sums[d].writable(path.sums[d]);
            path.sums[d] = id;
            self.sums[d].arrays[id][0] = bit;
            return;
        }
        self.scratch[d][0] = bit;
        let mut node = i;
        while d > 1 {
            let parent = node >> 1;
            let m = self.scratch[d].len();
            let (su, sd) = self.scratch.split_at_mut(d);
            let r = &sd[0];
            if parent & 1 == 0 {
                let id = self.sums[d - 1].writable(path.sums[d - 1]);
                path.sums[d - 1] = id;
                let (pu, pd) = self.sums.split_at_mut(d);
                let l = &pd[0].arrays[path.sums[d]];
                let target = &mut pu[d - 1].arrays[id];
                for k in 0..m {
                    target[k] = l[k] ^ r[k];
                    target[k + m] = r[k];
                }
                return;
            }
            let l = &self.sums[d].arrays[path.sums[d]];
            let target = &mut su[d - 1];
            for k in 0..m {
                target[k] = l[k] ^ r[k];
                target[k + m] = r[k];
            }
            node = parent;
            d -= 1;
        }
    }

    fn release(&mut self, path: &Path) {
        for d in 1..path.llr.len() {
            self.llr[d].release(path.llr[d]);
            self.sums[d].release(path.sums[d]);
        }
    }

    fn fork(&mut self, path: &Path) -> Path {
        for d in 1..path.llr.len() {
            self.llr[d].retain(path.llr[d]);
            self.sums[d].retain(path.sums[d]);
        }
        path.clone()
    }

    /// Runs a list decode with list size `list` and returns the survivors,
    /// best metric first (ties by list position).
    pub fn list_decode(
        &mut self,
        llrs: &[f64],
        spec: &CodeSpec,
        list: usize,
        priors: Option<&Priors>,
    ) -> Result<Vec<ListCandidate>> {
        if llrs.len() != spec.len() {
            return invalid(format!("{} LLRs for a length-{} code", llrs.len(), spec.len()));
        }
        if priors.is_some_and(|p| p.len() != spec.len()) {
            return invalid("prior vector length differs from code length");
        }
        if list == 0 || list > self.max_list || !list.is_power_of_two() {
            return invalid(format!("list size {list} not a power of two within {}", self.max_list));
        }
        let n = self.prepare(llrs.len(), list)? as usize;
        self.channel.copy_from_slice(llrs);
        let len = llrs.len();

        let mut root = Path {
            llr: vec![0; n + 1],
            sums: vec![0; n + 1],
            metric: 0.0,
        };
        for d in 1..=n {
            root.llr[d] = self.llr[d].alloc();
            root.sums[d] = self.sums[d].alloc();
        }
        let mut paths = vec![root];
        // history[i][j] = (parent list position, bit) of path j after bit i
        let mut history: Vec<Vec<(u32, u8)>> = Vec::with_capacity(len);
        let mut leaf = Vec::with_capacity(list);
        // (metric, list position, bit, contradicts the decision LLR)
        let mut candidates: Vec<(f64, usize, u8, bool)> = Vec::with_capacity(2 * list);

        for i in 0..len {
            leaf.clear();
            for path in paths.iter_mut() {
                let lam = self.descend(n, i, path);
                leaf.push(lam);
            }
            let known = if spec.is_frozen(i) {
                Some(spec.frozen_value(i))
            } else {
                priors.map(|p| p.get(i)).filter(|p| is_infinite(*p)).map(|p| u8::from(p < 0.0))
            };
            let mut step = Vec::with_capacity(paths.len().min(list) * 2);
            if let Some(bit) = known {
                for (j, path) in paths.iter_mut().enumerate() {
                    path.metric = sat_add(path.metric, penalty(leaf[j], bit));
                    step.push((j as u32, bit));
                }
            } else {
                let prior = priors.map_or(0.0, |p| p.get(i));
                candidates.clear();
                for (j, path) in paths.iter().enumerate() {
                    let lam = sat_add(leaf[j], prior);
                    for bit in [0u8, 1u8] {
                        let against = hard_decision(lam) != bit;
                        candidates.push((sat_add(path.metric, penalty(lam, bit)), j, bit, against));
                    }
                }
                if candidates.len() > list {
                    // A penalty too small to change the metric in floating point
                    // still ranks the decision that follows the LLR first.
                    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.3.cmp(&b.3)).then(a.1.cmp(&b.1)));
                    candidates.truncate(list);
                }
                let mut keep = vec![[None::<f64>; 2]; paths.len()];
                for &(metric, j, bit, _) in &candidates {
                    keep[j][bit as usize] = Some(metric);
                }
                let old = std::mem::take(&mut paths);
                for (j, path) in old.iter().enumerate() {
                    if keep[j].iter().all(Option::is_none) {
                        self.release(path);
                    }
                }
                for (j, path) in old.into_iter().enumerate() {
                    match keep[j] {
                        [None, None] => {}
                        [Some(m0), Some(m1)] => {
                            let mut other = self.fork(&path);
                            let mut first = path;
                            first.metric = m0;
                            other.metric = m1;
                            paths.push(first);
                            step.push((j as u32, 0));
                            paths.push(other);
                            step.push((j as u32, 1));
                        }
                        [Some(m), None] | [None, Some(m)] => {
                            let bit = u8::from(keep[j][0].is_none());
                            let mut p = path;
                            p.metric = m;
                            paths.push(p);
                            step.push((j as u32, bit));
                        }
                    }
                }
            }
            if i + 1 < len {
                for (j, path) in paths.iter_mut().enumerate() {
                    self.update_sums(n, i, step[j].1, path);
                }
            }
            history.push(step);
        }

        let mut order: Vec<usize> = (0..paths.len()).collect();
        order.sort_by(|&a, &b| paths[a].metric.total_cmp(&paths[b].metric).then(a.cmp(&b)));
        let out = order
            .into_iter()
            .map(|j| {
                let mut u = vec![0u8; len];
                let mut pos = j;
                for i in (0..len).rev() {
                    let (parent, bit) = history[i][pos];
                    u[i] = bit;
                    pos = parent as usize;
                }
                ListCandidate {
                    u_hat: u,
                    metric: paths[j].metric,
                }
            })
            .collect();
        Ok(out)
    }

    /// Adaptive CRC-aided list decoding: list sizes 1, 2, 4, … up to
    /// `max_list`, stopping at the first list holding a CRC-passing path. The
    /// best-metric passing path is returned; without any, the best path comes
    /// back with `crc_ok = false`. Without a CRC a single decode at
    /// `max_list` is run.
    pub fn decode_adaptive(
        &mut self,
        llrs: &[f64],
        spec: &CodeSpec,
        crc: Option<&CrcSpec>,
        priors: Option<&Priors>,
    ) -> Result<DecodeResult> {
        let Some(crc) = crc else {
            let best = self.list_decode(llrs, spec, self.max_list, priors)?.swap_remove(0);
            return DecodeResult::from_u(best.u_hat, spec, true, best.metric, self.max_list);
        };
        if spec.info_count() <= crc.width() {
            return invalid(format!(
                "{} information bits cannot hold a {}-bit CRC",
                spec.info_count(),
                crc.width()
            ));
        }
        let mut list = 1;
        loop {
            let candidates = self.list_decode(llrs, spec, list, priors)?;
            for c in &candidates {
                if crc.check(&extract_message(&c.u_hat, spec)?) {
                    return DecodeResult::from_u(c.u_hat.clone(), spec, true, c.metric, list);
                }
            }
            if list >= self.max_list {
                let best = candidates.into_iter().next().expect("list is never empty");
                return DecodeResult::from_u(best.u_hat, spec, false, best.metric, list);
            }
            list *= 2;
        }
    }
}

#[inline]
fn penalty(lam: f64, bit: u8) -> f64 {
    if lam != 0.0 && hard_decision(lam) != bit {
        lam.abs()
    } else {
        0.0
    }
}
