//! Property tests over randomized inputs.

use equilib::geometry::{Point, Region};
use equilib::grid::Grid2D;
use equilib::halfspace::is_fully_singular;
use equilib::oracle::{direct_minimize, StepRule};
use equilib::potential::{energy, DiscreteMeasure};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oracle_keeps_the_partition(cx in -0.5..0.5f64, r in 0.4..0.8f64, extra in 0.05..0.4f64, iters in 1usize..300) {
        let region = Region::Disk { center: Point::new(cx, 0.0), radius: r };
        let p = (region.circular_law_mass() + extra).min(1.0);
        let grid = Grid2D::unchecked(1.5, 12);
        let start = direct_minimize(&region, p, &grid, 0, StepRule::Pairwise).unwrap();
        let run = direct_minimize(&region, p, &grid, iters, StepRule::Pairwise).unwrap();
        let (inside, outside) = run.measure.partition_masses();
        prop_assert!((inside - p).abs() < 1e-12);
        prop_assert!((outside - (1.0 - p)).abs() < 1e-12);
        prop_assert!(run.measure.masses.iter().all(|m| *m >= 0.0));
        prop_assert!(run.energy <= start.energy + 1e-12);
        prop_assert!(run.gap >= -1e-12);
    }

    #[test]
    fn uniform_disk_energy(r in 0.5..1.0f64) {
        // ℐ of the uniform law on the disk of radius r: −log r + 1/4 + r²/2
        let grid = Grid2D::new(2.0, 257).unwrap();
        let scaled = Grid2D::unchecked(2.0 / r, 257);
        let mu = DiscreteMeasure { grid, ..DiscreteMeasure::circular_law(scaled, 8) }.normalized();
        let exact = -r.ln() + 0.25 + r * r / 2.0;
        prop_assert!((energy(&mu) - exact).abs() < 5e-3);
    }

    #[test]
    fn full_concentration_is_monotone_in_a(a in 0.5..2.5f64, step in 0.01..1.0f64) {
        let lo = is_fully_singular(a).fully_singular;
        let hi = is_fully_singular(a + step).fully_singular;
        prop_assert!(!lo || hi);
    }
}
