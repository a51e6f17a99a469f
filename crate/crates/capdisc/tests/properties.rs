//! Cross-module properties that no single unit suite owns: the tiling is a
//! partition, point counts are stable under the choice rule, and cell-visit
//! counts do not depend on the tiling offset beyond their budget.

use capdisc::curves;
use capdisc::intersect::{intersection_number, lemma_bound};
use capdisc::lattice::{build_point_set, cell_index, LatticeConfig, Perturbation};
use capdisc::planar::{Mat2, Polyline, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_invertible(rng: &mut ChaCha8Rng) -> Mat2 {
    loop {
        let m = Mat2::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        );
        if m.rank() == 2 && m.det().abs() >= 0.05 {
            return m;
        }
    }
}

#[test]
fn every_point_lies_in_the_cell_of_its_own_index() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10_000 {
        let q = random_invertible(&mut rng);
        let k = rng.random_range(1u32..=80);
        let v = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let cfg = LatticeConfig::new(q, k, Perturbation::CellCenter).with_offset(v);
        let x = Vec2::new(rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0));
        let p = cell_index(&cfg, x).unwrap();
        let u = q
            .inverse()
            .unwrap()
            .mul_vec(Vec2::new(k as f64 * x.x, k as f64 * x.y) - v);
        let fx = u.x - p[0] as f64;
        let fy = u.y - p[1] as f64;
        assert!(
            (-1e-9..1.0 + 1e-9).contains(&fx) && (-1e-9..1.0 + 1e-9).contains(&fy),
            "point escapes its cell: fractional part ({fx}, {fy})"
        );
    }
}

#[test]
fn choice_rule_changes_the_count_by_at_most_the_boundary_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let outline = Polyline::closed(vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(0.0, 1.0),
    ])
    .unwrap();
    for trial in 0..20u64 {
        let q = random_invertible(&mut rng);
        let k = rng.random_range(2u32..=25);
        let v = if trial % 2 == 0 {
            Vec2::new(0.0, 0.0)
        } else {
            Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        };
        let centered = build_point_set(
            &LatticeConfig::new(q, k, Perturbation::CellCenter).with_offset(v),
        )
        .unwrap();
        let uniform = build_point_set(
            &LatticeConfig::new(q, k, Perturbation::UniformRandom { seed: trial }).with_offset(v),
        )
        .unwrap();
        let budget = intersection_number(&outline, q, k, v).unwrap();
        let diff = centered.len().abs_diff(uniform.len());
        assert!(
            diff <= budget,
            "trial {trial}: counts differ by {diff}, boundary meets only {budget} cells"
        );
    }
}

#[test]
fn cell_visit_bound_holds_for_every_tiling_offset() {
    let mut rng = ChaCha8Rng::seed_from_u64(79);
    let beta = curves::circle(Vec2::new(0.5, 0.5), 0.35, 256).unwrap();
    let q = Mat2::rotation_like(0.8);
    let k = 40u32;
    let bound = lemma_bound(&beta, q, k).unwrap();
    let mut lo = usize::MAX;
    let mut hi = 0usize;
    for _ in 0..100 {
        let v = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let count = intersection_number(&beta, q, k, v).unwrap();
        lo = lo.min(count);
        hi = hi.max(count);
        assert!(
            (count as f64) <= bound,
            "offset {v:?}: count {count} above bound {bound}"
        );
    }
    // The shared bound confines the spread across offsets.
    assert!(hi - lo <= bound as usize);
}
