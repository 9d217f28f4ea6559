//! Exact empirical risk minimization over tuples of cover elements.
//!
//! Signs of every cover element on the sample are packed into bitsets, so the
//! error of a tuple reduces to popcounts over word-wise ANDs.

use rayon::prelude::*;

use super::{BooleanHypothesis, Cover, Halfspace};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};

/// Packed signs of a list of halfspaces on a labeled sample.
#[derive(Debug, Clone)]
pub struct SignTable {
    n: usize,
    words: usize,
    /// Row `h` holds bit `i` set iff `h(x_i) = +1`; padding bits are zero.
    bits: Vec<u64>,
    positive: Vec<u64>,
    ones: Vec<u32>,
    ones_positive: Vec<u32>,
    total_positive: u32,
}

impl SignTable {
    pub fn new(hypotheses: &[Halfspace], sample: &LabeledDataset) -> Result<Self> {
        let n = sample.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if n > u32::MAX as usize {
            return Err(Error::Resource { what: "sample size", needed: n as u128, limit: u32::MAX as u128 });
        }
        let words = n.div_ceil(64);
        let mut positive = vec![0u64; words];
        for i in 0..n {
            if sample.label(i) > 0 {
                positive[i / 64] |= 1 << (i % 64);
            }
        }
        let rows: Vec<Vec<u64>> = hypotheses
            .par_iter()
            .map(|h| {
                let mut row = vec![0u64; words];
                for i in 0..n {
                    if h.eval(sample.point(i)) > 0 {
                        row[i / 64] |= 1 << (i % 64);
                    }
                }
                row
            })
            .collect();
        let ones = rows.iter().map(|r| r.iter().map(|w| w.count_ones()).sum()).collect();
        let ones_positive =
            rows.iter().map(|r| r.iter().zip(&positive).map(|(a, p)| (a & p).count_ones()).sum()).collect();
        let total_positive = positive.iter().map(|w| w.count_ones()).sum();
        Ok(Self { n, words, bits: rows.concat(), positive, ones, ones_positive, total_positive })
    }

    pub fn len(&self) -> usize {
        self.ones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ones.is_empty()
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    fn row(&self, h: usize) -> &[u64] {
        &self.bits[h * self.words..(h + 1) * self.words]
    }

    /// Number of mistakes of hypothesis `h` on the sample.
    pub fn mistakes(&self, h: usize) -> u32 {
        // disagreements = (+1 predicted on negatives) + (-1 predicted on positives)
        (self.ones[h] - self.ones_positive[h]) + (self.total_positive - self.ones_positive[h])
    }

    /// Mistakes of the best truth table on top of `tuple`.
    pub fn boolean_mistakes(&self, tuple: &[usize], scratch: &mut Scratch) -> u32 {
        let k = tuple.len();
        let cells = 1usize << k;
        scratch.prepare(cells);
        let (tot, pos, and) = (&mut scratch.tot, &mut scratch.pos, &mut scratch.and);
        tot[0] = self.n as i64;
        pos[0] = self.total_positive as i64;
        for j in 0..k {
            tot[1 << j] = self.ones[tuple[j]] as i64;
            pos[1 << j] = self.ones_positive[tuple[j]] as i64;
        }
        for w in 0..self.words {
            let pw = self.positive[w];
            for j in 0..k {
                and[1 << j] = self.row(tuple[j])[w];
            }
            for s in 3..cells {
                if s & (s - 1) == 0 {
                    continue;
                }
                let top = usize::BITS - 1 - s.leading_zeros();
                let a = and[s & !(1 << top)] & and[1 << top];
                and[s] = a;
                tot[s] += a.count_ones() as i64;
                pos[s] += (a & pw).count_ones() as i64;
            }
        }
        // superset Moebius transform: subset-intersection counts -> cell counts
        for j in 0..k {
            for s in 0..cells {
                if s & (1 << j) == 0 {
                    tot[s] -= tot[s | 1 << j];
                    pos[s] -= pos[s | 1 << j];
                }
            }
        }
        (0..cells).map(|c| pos[c].min(tot[c] - pos[c]) as u32).sum()
    }

    /// Mistakes of the conjunction of `tuple`.
    pub fn intersection_mistakes(&self, tuple: &[usize]) -> u32 {
        let (mut inside, mut inside_pos) = (0u32, 0u32);
        for w in 0..self.words {
            let mut a = u64::MAX;
            for &h in tuple {
                a &= self.row(h)[w];
            }
            inside += a.count_ones();
            inside_pos += (a & self.positive[w]).count_ones();
        }
        (self.total_positive - inside_pos) + (inside - inside_pos)
    }
}

/// Reusable buffers for [`SignTable::boolean_mistakes`].
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    tot: Vec<i64>,
    pos: Vec<i64>,
    and: Vec<u64>,
}

impl Scratch {
    fn prepare(&mut self, cells: usize) {
        for v in [&mut self.tot, &mut self.pos] {
            v.clear();
            v.resize(cells, 0);
        }
        self.and.clear();
        self.and.resize(cells, 0);
    }
}

/// Cover element with least empirical error on `sample` (first on ties).
pub fn erm_halfspace(cover: &Cover, sample: &LabeledDataset) -> Result<(Halfspace, f64)> {
    let table = SignTable::new(cover.hypotheses(), sample)?;
    let (best, mistakes) =
        (0..table.len()).map(|h| (h, table.mistakes(h))).min_by_key(|&(h, m)| (m, h)).expect("cover is non-empty");
    Ok((cover.hypotheses()[best].clone(), mistakes as f64 / sample.len() as f64))
}

/// Majority-label truth table on the cells of `halfspaces` (ties and empty
/// cells map to `+1`) together with its empirical error.
pub fn cell_boolean_erm(halfspaces: &[Halfspace], sample: &LabeledDataset) -> Result<(BooleanHypothesis, f64)> {
    if sample.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let cells = 1usize << halfspaces.len();
    let probe = BooleanHypothesis::new(halfspaces.to_vec(), vec![1; cells])?;
    let mut pos = vec![0u64; cells];
    let mut neg = vec![0u64; cells];
    for (x, y) in sample.iter() {
        let c = probe.cell(x);
        if y > 0 {
            pos[c] += 1;
        } else {
            neg[c] += 1;
        }
    }
    let table: Vec<i8> = (0..cells).map(|c| if pos[c] >= neg[c] { 1 } else { -1 }).collect();
    let mistakes: u64 = (0..cells).map(|c| pos[c].min(neg[c])).sum();
    Ok((BooleanHypothesis::new(halfspaces.to_vec(), table)?, mistakes as f64 / sample.len() as f64))
}

/// `C(n + k - 1, k)`: number of nondecreasing `k`-tuples over `n` items.
fn multiset_count(n: usize, k: usize) -> u128 {
    if n == 0 {
        return 0;
    }
    crate::hermite::binomial((n + k - 1) as u64, k as u64)
}

/// Advances a nondecreasing tuple in lexicographic order; false at the end.
fn next_tuple(t: &mut [usize], n: usize) -> bool {
    let mut j = t.len();
    while j > 0 {
        j -= 1;
        if t[j] + 1 < n {
            let v = t[j] + 1;
            for x in &mut t[j..] {
                *x = v;
            }
            return true;
        }
    }
    false
}

/// Best tuple over all nondecreasing `k`-tuples, by `(mistakes, tuple)`.
///
/// Restricting to nondecreasing tuples loses nothing: any `k`-tuple of
/// halfspaces is matched in error by its sorted version (the truth table is
/// re-optimized), and the sorted version comes first in lexicographic order.
fn best_tuple(n: usize, k: usize, eval: impl Fn(&[usize], &mut Scratch) -> u32 + Sync) -> (u32, Vec<usize>) {
    (0..n)
        .into_par_iter()
        .map(|first| {
            let mut scratch = Scratch::default();
            let mut t = vec![first; k];
            let mut best = (u32::MAX, t.clone());
            loop {
                let m = eval(&t, &mut scratch);
                if m < best.0 {
                    best = (m, t.clone());
                }
                // the tail t[1..] ranges over nondecreasing tuples >= first
                if k == 1 || !next_tail(&mut t, n) {
                    break;
                }
            }
            best
        })
        .reduce(|| (u32::MAX, vec![usize::MAX; k]), |a, b| if (b.0, &b.1) < (a.0, &a.1) { b } else { a })
}

fn next_tail(t: &mut [usize], n: usize) -> bool {
    next_tuple(&mut t[1..], n)
}

fn sequential_prefix(
    n: usize,
    k: usize,
    limit: u64,
    eval: impl Fn(&[usize], &mut Scratch) -> u32,
) -> (u32, Vec<usize>, u64) {
    let mut scratch = Scratch::default();
    let mut t = vec![0; k];
    let mut best = (u32::MAX, t.clone());
    let mut examined = 0u64;
    while examined < limit {
        let m = eval(&t, &mut scratch);
        examined += 1;
        if m < best.0 {
            best = (m, t.clone());
        }
        if !next_tuple(&mut t, n) {
            break;
        }
    }
    (best.0, best.1, examined)
}

fn tuple_search(
    cover: &Cover,
    k: usize,
    sample: &LabeledDataset,
    max_tuples: u64,
    finish: impl Fn(&[Halfspace]) -> Result<(BooleanHypothesis, f64)>,
    eval: impl Fn(&SignTable, &[usize], &mut Scratch) -> u32 + Sync,
) -> Result<(BooleanHypothesis, f64)> {
    if k == 0 || k > 16 {
        return Err(Error::InvalidArgument(format!("K = {k} outside 1..=16")));
    }
    let table = SignTable::new(cover.hypotheses(), sample)?;
    let n = table.len();
    let total = multiset_count(n, k);
    let pick = |t: &[usize]| -> Vec<Halfspace> { t.iter().map(|&i| cover.hypotheses()[i].clone()).collect() };
    if total > max_tuples as u128 {
        let (m, t, examined) = sequential_prefix(n, k, max_tuples, |t, s| eval(&table, t, s));
        let (best, err) = finish(&pick(&t))?;
        debug_assert_eq!((err * sample.len() as f64).round() as u32, m);
        return Err(Error::TupleBudget { examined, error: err, best: Box::new(best) });
    }
    let (m, t) = best_tuple(n, k, |t, s| eval(&table, t, s));
    let (best, err) = finish(&pick(&t))?;
    let recount = (err * sample.len() as f64).round() as u32;
    if recount != m {
        return Err(Error::Invariant(format!("tuple search counted {m} mistakes, direct evaluation {recount}")));
    }
    Ok((best, err))
}

/// Exact minimizer of empirical error over `f(h_1, ..., h_K)` with `h_j` in
/// the cover and `f` any truth table. Ties: smallest tuple in lexicographic
/// order of cover indices, then the majority table of
/// [`cell_boolean_erm`].
///
/// When the number of tuples exceeds `max_tuples`, examines only the first
/// `max_tuples` and returns [`Error::TupleBudget`] with the best of those.
pub fn search_boolean(
    cover: &Cover,
    k: usize,
    sample: &LabeledDataset,
    max_tuples: u64,
) -> Result<(BooleanHypothesis, f64)> {
    tuple_search(
        cover,
        k,
        sample,
        max_tuples,
        |hs| cell_boolean_erm(hs, sample),
        |tab, t, s| tab.boolean_mistakes(t, s),
    )
}

/// As [`search_boolean`] with the truth table fixed to the conjunction.
pub fn search_intersection(
    cover: &Cover,
    k: usize,
    sample: &LabeledDataset,
    max_tuples: u64,
) -> Result<(BooleanHypothesis, f64)> {
    tuple_search(
        cover,
        k,
        sample,
        max_tuples,
        |hs| {
            let h = BooleanHypothesis::intersection(hs.to_vec())?;
            let err = sample.error_of(|x| h.eval(x));
            Ok((h, err))
        },
        |tab, t, _| tab.intersection_mistakes(t),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Subspace;

    fn toy_sample() -> LabeledDataset {
        // XOR pattern on the coordinate axes
        let pts = vec![1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0, 1.0, 2.0, 0.5];
        LabeledDataset::new(2, pts, vec![-1, -1, 1, 1, -1]).unwrap()
    }

    fn axis_cover() -> Cover {
        let hs = vec![
            Halfspace::constant(2, 1),
            Halfspace::constant(2, -1),
            Halfspace::new(vec![1.0, 0.0], 0.0).unwrap(),
            Halfspace::new(vec![0.0, 1.0], 0.0).unwrap(),
        ];
        Cover::from_hypotheses(hs, 0.0, Subspace::full(2)).unwrap()
    }

    #[test]
    fn tuple_enumeration_is_complete() {
        let mut t = vec![0; 3];
        let mut count = 1;
        let mut prev = t.clone();
        while next_tuple(&mut t, 4) {
            assert!(t.windows(2).all(|w| w[0] <= w[1]));
            assert!(t > prev);
            prev = t.clone();
            count += 1;
        }
        assert_eq!(count as u128, multiset_count(4, 3));
    }

    #[test]
    fn xor_is_found() {
        let s = toy_sample();
        let (h, err) = search_boolean(&axis_cover(), 2, &s, u64::MAX).unwrap();
        assert_eq!(err, 0.0);
        assert_eq!(h.halfspaces()[0].normal(), &[1.0, 0.0]);
        assert_eq!(h.truth_table_bits(), "0110");
        // a single halfspace cannot do better than 2/5 here
        let (_, e1) = erm_halfspace(&axis_cover(), &s).unwrap();
        assert!((e1 - 0.4).abs() < 1e-15);
        let (_, ei) = search_intersection(&axis_cover(), 2, &s, u64::MAX).unwrap();
        assert!(ei >= 0.2);
    }

    #[test]
    fn cell_counts_match_direct_evaluation() {
        let s = toy_sample();
        let cover = axis_cover();
        let table = SignTable::new(cover.hypotheses(), &s).unwrap();
        let mut scratch = Scratch::default();
        for t in [[0usize, 2, 3], [1, 1, 2], [2, 3, 3]] {
            let hs: Vec<Halfspace> = t.iter().map(|&i| cover.hypotheses()[i].clone()).collect();
            let (_, err) = cell_boolean_erm(&hs, &s).unwrap();
            assert_eq!(table.boolean_mistakes(&t, &mut scratch) as f64 / 5.0, err);
        }
    }

    #[test]
    fn budget_returns_best_prefix() {
        let s = toy_sample();
        match search_boolean(&axis_cover(), 2, &s, 3) {
            Err(Error::TupleBudget { examined, .. }) => assert_eq!(examined, 3),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn empty_cells_default_to_plus_one() {
        let s = LabeledDataset::new(1, vec![1.0, 2.0], vec![-1, -1]).unwrap();
        let h = Halfspace::new(vec![1.0], 0.0).unwrap();
        let (b, err) = cell_boolean_erm(&[h], &s).unwrap();
        assert_eq!(err, 0.0);
        assert_eq!(b.truth_table(), &[1, -1]);
    }
}
