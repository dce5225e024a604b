//! Chunked tree accumulation of lane vectors.
//!
//! Terms arrive one vector at a time in row order. Every `k` consecutive
//! terms form a chunk that is reduced by pairwise addition over a
//! power-of-two tree padded with exact zeros; the chunk results are then added
//! into a running accumulator. Pairwise merging is done with a binary counter
//! so that only `log2(k) + 1` partial vectors are live at once.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul};

/// Arithmetic type of the accumulation.
pub(crate) trait Lane:
    Copy + Default + PartialEq + Add<Output = Self> + Mul<Output = Self> + Send + Sync
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Lane for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Lane for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

pub(crate) struct ChunkedTreeSum<T> {
    width: usize,
    k: usize,
    in_chunk: usize,
    levels: Vec<Vec<T>>,
    occupied: Vec<bool>,
    carry: Vec<T>,
    acc: Vec<T>,
}

impl<T: Lane> ChunkedTreeSum<T> {
    pub(crate) fn new(width: usize, k: usize) -> Self {
        assert!(k >= 1);
        let depth = (usize::BITS - k.leading_zeros()) as usize + 1;
        ChunkedTreeSum {
            width,
            k,
            in_chunk: 0,
            levels: (0..depth).map(|_| vec![T::default(); width]).collect(),
            occupied: vec![false; depth],
            carry: vec![T::default(); width],
            acc: vec![T::default(); width],
        }
    }

    /// Scratch vector to fill with the next term before [`Self::push_carry`].
    pub(crate) fn term_buf(&mut self) -> &mut [T] {
        &mut self.carry
    }

    /// Pushes the term currently held in [`Self::term_buf`].
    pub(crate) fn push_carry(&mut self) {
        let mut level = 0;
        while self.occupied[level] {
            for (c, l) in self.carry.iter_mut().zip(&self.levels[level]) {
                *c = *l + *c;
            }
            self.occupied[level] = false;
            level += 1;
        }
        core::mem::swap(&mut self.carry, &mut self.levels[level]);
        self.occupied[level] = true;
        self.in_chunk += 1;
        if self.in_chunk == self.k {
            self.finish_chunk();
        }
    }

    pub(crate) fn push_zero(&mut self) {
        self.carry.fill(T::default());
        self.push_carry();
    }

    /// Closes a partially filled chunk (no-op if the chunk is empty).
    pub(crate) fn finish_chunk(&mut self) {
        if self.in_chunk == 0 {
            return;
        }
        let mut have = false;
        for level in 0..self.levels.len() {
            if !self.occupied[level] {
                continue;
            }
            if have {
                for (c, l) in self.carry.iter_mut().zip(&self.levels[level]) {
                    *c = *l + *c;
                }
            } else {
                self.carry.copy_from_slice(&self.levels[level]);
                have = true;
            }
            self.occupied[level] = false;
        }
        for (a, c) in self.acc.iter_mut().zip(&self.carry) {
            *a = *a + *c;
        }
        self.in_chunk = 0;
    }

    pub(crate) fn finish(mut self) -> Vec<T> {
        self.finish_chunk();
        debug_assert_eq!(self.acc.len(), self.width);
        self.acc
    }
}

/// Reference scalar form: pairwise sum over a zero-padded power-of-two tree.
#[cfg(test)]
pub(crate) fn padded_tree_sum(xs: &[f64]) -> f64 {
    let mut level: Vec<f64> = xs.to_vec();
    level.resize(xs.len().next_power_of_two().max(1), 0.0);
    while level.len() > 1 {
        level = level.chunks(2).map(|p| p[0] + p[1]).collect();
    }
    level[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunked_reference(xs: &[f64], k: usize) -> f64 {
        let mut acc = 0.0;
        for c in xs.chunks(k) {
            acc += padded_tree_sum(c);
        }
        acc
    }

    #[test]
    fn matches_level_order_tree() {
        let xs: Vec<f64> = (0..257).map(|i| ((i * 7919) % 1000) as f64 * 1e-3 + 1e-9 * i as f64).collect();
        for &k in &[1usize, 2, 3, 7, 8, 16, 100, 257, 300] {
            let mut s = ChunkedTreeSum::<f64>::new(1, k);
            for x in &xs {
                s.term_buf()[0] = *x;
                s.push_carry();
            }
            let got = s.finish()[0];
            assert_eq!(got.to_bits(), chunked_reference(&xs, k).to_bits(), "k={k}");
        }
    }

    #[test]
    fn leading_zeros_take_their_tree_slot() {
        // [0, a, b, c] reduces as (0 + a) + (b + c), not (a + b) + c.
        let (a, b, c) = (1.0, 1e-16, 1e-16);
        let mut s = ChunkedTreeSum::<f64>::new(1, 4);
        s.push_zero();
        for x in [a, b, c] {
            s.term_buf()[0] = x;
            s.push_carry();
        }
        assert_eq!(s.finish()[0], a + (b + c));
    }
}
