//! Semi-algebraic sets `{x : g(x) >= 0}` and unions of them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::poly::{Polynomial, VariableSpace};

/// Axis-aligned box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::structural("box bounds have different lengths"));
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l < h) {
                return Err(Error::validation(format!("inverted or empty bounds in dimension {i}: [{l}, {h}]")));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| *l <= *x && *x <= *h)
    }

    pub fn contains_box(&self, other: &AxisBox) -> bool {
        self.dim() == other.dim() && (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    pub fn concat(&self, other: &AxisBox) -> AxisBox {
        AxisBox {
            lo: self.lo.iter().chain(&other.lo).copied().collect(),
            hi: self.hi.iter().chain(&other.hi).copied().collect(),
        }
    }

    fn interior_overlaps(&self, other: &AxisBox) -> bool {
        (0..self.dim()).all(|i| self.lo[i] < other.hi[i] && other.lo[i] < self.hi[i])
    }
}

/// `{x in space : g_i(x) >= 0 for all i}`; no constraints means the whole space.
#[derive(Clone, Debug)]
pub struct SemiAlgebraicSet {
    space: VariableSpace,
    constraints: Vec<Polynomial>,
    pub label: String,
    /// Known bounding box, used for sampling.
    bounds: Option<AxisBox>,
    /// Set when the set is exactly this box (as built by [`box_set`]).
    exact_box: Option<AxisBox>,
}

impl SemiAlgebraicSet {
    pub fn new(
        space: &VariableSpace,
        constraints: Vec<Polynomial>,
        label: impl Into<String>,
        bounds: Option<AxisBox>,
    ) -> Result<Self> {
        if let Some(bad) = constraints.iter().find(|g| g.space() != space) {
            return Err(Error::structural(format!(
                "constraint over {:?} in set over {:?}",
                bad.space().names(),
                space.names()
            )));
        }
        if let Some(b) = &bounds {
            if b.dim() != space.arity() {
                return Err(Error::structural("bounding box dimension mismatch"));
            }
        }
        Ok(Self { space: space.clone(), constraints, label: label.into(), bounds, exact_box: None })
    }

    pub fn whole(space: &VariableSpace, label: impl Into<String>) -> Self {
        Self::new(space, Vec::new(), label, None).expect("no constraints")
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn constraints(&self) -> &[Polynomial] {
        &self.constraints
    }

    pub fn bounds(&self) -> Option<&AxisBox> {
        self.bounds.as_ref()
    }

    pub fn as_box(&self) -> Option<&AxisBox> {
        self.exact_box.as_ref()
    }

    pub fn with_bounds(mut self, b: AxisBox) -> Result<Self> {
        if b.dim() != self.space.arity() {
            return Err(Error::structural("bounding box dimension mismatch"));
        }
        self.bounds = Some(b);
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Smallest constraint value at `p` (`+inf` for the whole space).
    pub fn min_constraint(&self, p: &[f64]) -> f64 {
        self.constraints.iter().map(|g| g.eval_unchecked(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.space.arity() && self.min_constraint(p) >= 0.0
    }

    /// Re-express over `target`, with variable `i` sent to `offset + i`.
    pub fn embed_block(&self, target: &VariableSpace, offset: usize) -> Result<SemiAlgebraicSet> {
        let constraints = self.constraints.iter().map(|g| g.embed_block(target, offset)).collect::<Result<Vec<_>>>()?;
        Ok(SemiAlgebraicSet {
            space: target.clone(),
            constraints,
            label: self.label.clone(),
            bounds: None,
            exact_box: None,
        })
    }
}

/// Box set with one normalized quadratic constraint per dimension:
/// `4 (x_i - lo_i)(hi_i - x_i) / (hi_i - lo_i)^2 >= 0`, which peaks at 1.
pub fn box_set(space: &VariableSpace, b: &AxisBox, label: impl Into<String>) -> Result<SemiAlgebraicSet> {
    if b.dim() != space.arity() {
        return Err(Error::structural(format!("box of dimension {} for space of arity {}", b.dim(), space.arity())));
    }
    let mut constraints = Vec::with_capacity(b.dim());
    for i in 0..b.dim() {
        let x = Polynomial::var(space, i);
        let lo = &x - &Polynomial::constant(space, b.lo[i]);
        let hi = &Polynomial::constant(space, b.hi[i]) - &x;
        let w = b.hi[i] - b.lo[i];
        constraints.push((&lo * &hi).scale(4.0 / (w * w)));
    }
    let mut s = SemiAlgebraicSet::new(space, constraints, label, Some(b.clone()))?;
    s.exact_box = Some(b.clone());
    Ok(s)
}

/// Cartesian product over an explicitly given concatenated space.
pub fn product_in(space: &VariableSpace, parts: &[&SemiAlgebraicSet]) -> Result<SemiAlgebraicSet> {
    let total: usize = parts.iter().map(|p| p.space().arity()).sum();
    if total != space.arity() {
        return Err(Error::structural(format!(
            "product of arity {total} does not fit space of arity {}",
            space.arity()
        )));
    }
    let mut constraints = Vec::new();
    let mut offset = 0;
    let mut bounds = Some(AxisBox { lo: Vec::new(), hi: Vec::new() });
    let mut exact = Some(AxisBox { lo: Vec::new(), hi: Vec::new() });
    let mut labels = Vec::new();
    for p in parts {
        for g in p.constraints() {
            constraints.push(g.embed_block(space, offset)?);
        }
        bounds = match (bounds, p.bounds()) {
            (Some(acc), Some(b)) => Some(acc.concat(b)),
            _ => None,
        };
        exact = match (exact, p.as_box()) {
            (Some(acc), Some(b)) => Some(acc.concat(b)),
            _ => None,
        };
        labels.push(p.label.clone());
        offset += p.space().arity();
    }
    let mut s = SemiAlgebraicSet::new(space, constraints, labels.join(" x "), bounds)?;
    s.exact_box = exact;
    Ok(s)
}

/// `S1 x S2` over the concatenation of their spaces (names must be distinct).
pub fn product_set(s1: &SemiAlgebraicSet, s2: &SemiAlgebraicSet) -> Result<SemiAlgebraicSet> {
    let space = VariableSpace::concat(&[s1.space(), s2.space()])?;
    product_in(&space, &[s1, s2])
}

/// Finite union of sets over a common space. May be empty.
#[derive(Clone, Debug)]
pub struct RegionUnion {
    space: VariableSpace,
    pieces: Vec<SemiAlgebraicSet>,
}

impl RegionUnion {
    pub fn new(space: &VariableSpace, pieces: Vec<SemiAlgebraicSet>) -> Result<Self> {
        if pieces.iter().any(|p| p.space() != space) {
            return Err(Error::structural("region pieces live in different spaces"));
        }
        Ok(Self { space: space.clone(), pieces })
    }

    pub fn empty(space: &VariableSpace) -> Self {
        Self { space: space.clone(), pieces: Vec::new() }
    }

    pub fn from_boxes(space: &VariableSpace, boxes: &[AxisBox], label: &str) -> Result<Self> {
        let pieces = boxes
            .iter()
            .enumerate()
            .map(|(j, b)| box_set(space, b, format!("{label}[{}]", j + 1)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, pieces)
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn pieces(&self) -> &[SemiAlgebraicSet] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.pieces.iter().any(|s| s.contains(p))
    }

    /// The pieces as boxes, when every piece is an exact box.
    pub fn as_boxes(&self) -> Option<Vec<AxisBox>> {
        self.pieces.iter().map(|p| p.as_box().cloned()).collect()
    }
}

/// `outer \ inner` as at most `2n` boxes (slab decomposition). Pieces share
/// faces with each other and with `inner`; interiors are disjoint.
pub fn box_complement(space: &VariableSpace, outer: &AxisBox, inner: &AxisBox) -> Result<RegionUnion> {
    if !outer.contains_box(inner) {
        return Err(Error::validation("inner box is not contained in the outer box"));
    }
    let n = outer.dim();
    let mut boxes = Vec::new();
    // Slab i: axes < i clipped to inner, axis i outside inner, axes > i free.
    for i in 0..n {
        for (lo_i, hi_i) in [(outer.lo[i], inner.lo[i]), (inner.hi[i], outer.hi[i])] {
            if hi_i - lo_i <= 0.0 {
                continue;
            }
            let mut lo = outer.lo.clone();
            let mut hi = outer.hi.clone();
            lo[..i].copy_from_slice(&inner.lo[..i]);
            hi[..i].copy_from_slice(&inner.hi[..i]);
            lo[i] = lo_i;
            hi[i] = hi_i;
            boxes.push(AxisBox { lo, hi });
        }
    }
    if boxes.is_empty() {
        return Err(Error::validation("complement is empty: inner box equals outer box"));
    }
    RegionUnion::from_boxes(space, &boxes, "complement")
}

/// `outer \ (inner_1 ∪ ... ∪ inner_m)` as a union of boxes, by splitting
/// `outer` on every inner face and greedily merging surviving cells.
pub fn complement_of_union(
    space: &VariableSpace,
    outer: &AxisBox,
    inners: &[AxisBox],
    label: &str,
) -> Result<RegionUnion> {
    let n = outer.dim();
    if inners.iter().any(|b| b.dim() != n) {
        return Err(Error::structural("box dimension mismatch"));
    }
    let mut cuts: Vec<Vec<f64>> = (0..n).map(|i| vec![outer.lo[i], outer.hi[i]]).collect();
    for b in inners {
        for i in 0..n {
            for v in [b.lo[i], b.hi[i]] {
                if v > outer.lo[i] && v < outer.hi[i] {
                    cuts[i].push(v);
                }
            }
        }
    }
    for c in &mut cuts {
        c.sort_by(f64::total_cmp);
        c.dedup();
    }
    let counts: Vec<usize> = cuts.iter().map(|c| c.len() - 1).collect();
    let total: usize = counts.iter().product();
    let mut cells = Vec::new();
    for flat in 0..total {
        let mut rem = flat;
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in (0..n).rev() {
            let k = rem % counts[i];
            rem /= counts[i];
            lo[i] = cuts[i][k];
            hi[i] = cuts[i][k + 1];
        }
        let cell = AxisBox { lo, hi };
        let mid: Vec<f64> = (0..n).map(|i| 0.5 * (cell.lo[i] + cell.hi[i])).collect();
        if !inners.iter().any(|b| b.contains(&mid)) {
            cells.push(cell);
        }
    }
    if cells.is_empty() {
        return Err(Error::validation("complement is empty"));
    }
    merge_boxes(&mut cells);
    RegionUnion::from_boxes(space, &cells, label)
}

// Repeatedly fuse two boxes that agree on all axes but one and touch on that axis.
fn merge_boxes(cells: &mut Vec<AxisBox>) {
    loop {
        let mut merged = false;
        'outer: for a in 0..cells.len() {
            for b in (a + 1)..cells.len() {
                if let Some(m) = try_merge(&cells[a], &cells[b]) {
                    cells[a] = m;
                    cells.swap_remove(b);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    cells.sort_by(|a, b| {
        a.lo.iter().zip(&b.lo).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
}

fn try_merge(a: &AxisBox, b: &AxisBox) -> Option<AxisBox> {
    let n = a.dim();
    let mut axis = None;
    for i in 0..n {
        if a.lo[i] != b.lo[i] || a.hi[i] != b.hi[i] {
            if axis.is_some() {
                return None;
            }
            axis = Some(i);
        }
    }
    let i = axis?;
    if a.hi[i] == b.lo[i] || b.hi[i] == a.lo[i] {
        let mut m = a.clone();
        m.lo[i] = a.lo[i].min(b.lo[i]);
        m.hi[i] = a.hi[i].max(b.hi[i]);
        Some(m)
    } else {
        None
    }
}

/// True when the boxes have pairwise disjoint interiors.
pub fn interiors_disjoint(boxes: &[AxisBox]) -> bool {
    boxes.iter().enumerate().all(|(i, a)| boxes[i + 1..].iter().all(|b| !a.interior_overlaps(b)))
}

#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub points: Vec<Vec<f64>>,
    pub draws: usize,
    pub acceptance_rate: f64,
}

/// Options for [`sample_set`].
#[derive(Clone, Debug)]
pub struct SamplerConfig {
    /// Fraction of draws with some coordinates snapped to the bounding box faces.
    pub boundary_fraction: f64,
    /// Acceptance rate below which sampling is declared failed.
    pub min_acceptance: f64,
    /// Draws attempted before the acceptance rate is judged.
    pub min_draws: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { boundary_fraction: 0.0, min_acceptance: 1e-4, min_draws: 100_000 }
    }
}

/// Seeded rejection sampling of `count` points of `set` inside `bbox`.
pub fn sample_set(
    set: &SemiAlgebraicSet,
    bbox: &AxisBox,
    count: usize,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::validation("sample count must be at least 1"));
    }
    if bbox.dim() != set.space().arity() {
        return Err(Error::structural("bounding box dimension mismatch"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = bbox.dim();
    let mut points = Vec::with_capacity(count);
    let mut draws = 0usize;
    let mut p = vec![0.0; n];
    while points.len() < count {
        draws += 1;
        for i in 0..n {
            p[i] = rng.random_range(bbox.lo[i]..=bbox.hi[i]);
        }
        if cfg.boundary_fraction > 0.0 && rng.random::<f64>() < cfg.boundary_fraction {
            // Snap a random nonempty subset of coordinates to a face.
            let first = rng.random_range(0..n);
            for i in 0..n {
                if i == first || rng.random::<bool>() {
                    p[i] = if rng.random::<bool>() { bbox.lo[i] } else { bbox.hi[i] };
                }
            }
        }
        if set.contains(&p) {
            points.push(p.clone());
        }
        if draws >= cfg.min_draws && (points.len() as f64) < cfg.min_acceptance * draws as f64 {
            return Err(Error::Sampling(format!(
                "set `{}`: accepted {} of {} draws (rate below {:e})",
                set.label,
                points.len(),
                draws,
                cfg.min_acceptance
            )));
        }
    }
    Ok(SampleBatch { acceptance_rate: points.len() as f64 / draws as f64, points, draws })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> VariableSpace {
        VariableSpace::indexed("x", 2)
    }

    fn bx(lo: &[f64], hi: &[f64]) -> AxisBox {
        AxisBox::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn box_constraints_are_scaled_products() {
        let s = xy();
        let set = box_set(&s, &bx(&[-4.0, -4.0], &[4.0, 4.0]), "X").unwrap();
        assert_eq!(set.constraints().len(), 2);
        let raw = Polynomial::parse(&s, "16 - x1^2").unwrap().scale(1.0 / 16.0);
        assert!((&set.constraints()[0] - &raw).max_abs_coeff() < 1e-15);
        let one = VariableSpace::new(["x"]).unwrap();
        let unit = box_set(&one, &bx(&[0.0], &[1.0]), "I").unwrap();
        assert!(unit.contains(&[0.3]) && unit.contains(&[1.0]) && !unit.contains(&[1.2]));
        let b = box_set(&s, &bx(&[0.0, 0.5], &[0.5, 1.0]), "B").unwrap();
        assert!(b.constraints().iter().all(|g| g.eval(&[0.25, 0.75]).unwrap() > 0.0));
    }

    #[test]
    fn inverted_bounds_rejected() {
        assert!(AxisBox::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn products_concatenate_blocks() {
        let s = xy();
        let x = box_set(&s, &bx(&[-4.0, -4.0], &[4.0, 4.0]), "X").unwrap();
        let ys = VariableSpace::indexed("y", 2);
        let y = box_set(&ys, &bx(&[-4.0, -4.0], &[4.0, 4.0]), "X").unwrap();
        let p = product_set(&x, &y).unwrap();
        assert_eq!(p.constraints().len(), 4);
        assert_eq!(p.space().names(), ["x1", "x2", "y1", "y2"]);
        let whole = SemiAlgebraicSet::whole(&s, "R2");
        let lifted = product_set(&whole, &y).unwrap();
        assert_eq!(lifted.constraints().len(), 2);

        let x0 = box_set(&s, &bx(&[0.0, -3.5], &[0.5, -3.0]), "X0").unwrap();
        let xu = box_set(&ys, &bx(&[-4.0, 1.0], &[-1.0, 4.0]), "Xu1").unwrap();
        let c = product_set(&x0, &xu).unwrap();
        assert_eq!(c.constraints().len(), 4);
        assert!(c.contains(&[0.25, -3.25, -2.0, 2.0]));
        assert!(!c.contains(&[0.25, -3.25, 2.0, 2.0]));
    }

    #[test]
    fn complements() {
        let one = VariableSpace::new(["x"]).unwrap();
        let u = box_complement(&one, &bx(&[0.0], &[2.0]), &bx(&[0.0], &[0.7])).unwrap();
        assert_eq!(u.as_boxes().unwrap(), vec![bx(&[0.7], &[2.0])]);

        let s = xy();
        let u = box_complement(&s, &bx(&[0.0, 0.0], &[2.0, 2.0]), &bx(&[0.0, 0.0], &[1.0, 1.0])).unwrap();
        let boxes = u.as_boxes().unwrap();
        assert_eq!(boxes, vec![bx(&[1.0, 0.0], &[2.0, 2.0]), bx(&[0.0, 1.0], &[1.0, 2.0])]);
        let area: f64 = boxes.iter().map(AxisBox::volume).sum();
        assert!((area - 3.0).abs() < 1e-12);

        let same = bx(&[0.0, 0.0], &[1.0, 1.0]);
        assert!(box_complement(&s, &same, &same).is_err());
        assert!(box_complement(&s, &same, &bx(&[0.5, 0.5], &[1.5, 1.5])).is_err());
    }

    #[test]
    fn complement_of_kuramoto_visit_region() {
        let s = VariableSpace::indexed("x", 3);
        let outer = bx(&[0.0; 3], &[2.0; 3]);
        let vf = [bx(&[0.0, 0.0, 0.0], &[0.7, 0.7, 2.0]), bx(&[0.0, 1.45, 1.45], &[2.0, 2.0, 2.0])];
        let u = complement_of_union(&s, &outer, &vf, "X\\VF").unwrap();
        let boxes = u.as_boxes().unwrap();
        assert!(interiors_disjoint(&boxes));
        let vol: f64 = boxes.iter().map(AxisBox::volume).sum();
        let want = 8.0 - (0.7 * 0.7 * 2.0 + 2.0 * 0.55 * 0.55);
        assert!((vol - want).abs() < 1e-12);
        assert!(boxes.len() <= 4, "{boxes:?}");
    }

    #[test]
    fn disk_acceptance_rate() {
        let s = xy();
        let disk =
            SemiAlgebraicSet::new(&s, vec![Polynomial::parse(&s, "1 - x1^2 - x2^2").unwrap()], "disk", None).unwrap();
        let b = bx(&[-1.0, -1.0], &[1.0, 1.0]);
        let batch = sample_set(&disk, &b, 10_000, 3, &SamplerConfig::default()).unwrap();
        assert_eq!(batch.points.len(), 10_000);
        assert!(batch.points.iter().all(|p| disk.contains(p)));
        assert!((batch.acceptance_rate - std::f64::consts::FRAC_PI_4).abs() < 0.05);
    }

    #[test]
    fn infeasible_set_fails_to_sample() {
        let one = VariableSpace::new(["x"]).unwrap();
        let g1 = Polynomial::parse(&one, "x - 1").unwrap();
        let g2 = Polynomial::parse(&one, "-x").unwrap();
        let empty = SemiAlgebraicSet::new(&one, vec![g1, g2], "empty", None).unwrap();
        let err = sample_set(&empty, &bx(&[-2.0], &[2.0]), 5, 1, &SamplerConfig::default());
        assert!(matches!(err, Err(Error::Sampling(_))));
    }
}
