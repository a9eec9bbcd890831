//! Point-sampling oracle for box intersection. Shared with the acceptance
//! suite.

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use workbench_geom::Aabb;

/// Samples both boxes on a 0.5 lattice (box corners sit on the lattice) and
/// reports whether any sample lies in both.
pub fn lattice_oracle(a: ([i32; 3], [i32; 3]), b: ([i32; 3], [i32; 3])) -> bool {
    let lo = |i: usize| a.0[i].min(b.0[i]) * 2;
    let hi = |i: usize| a.1[i].max(b.1[i]) * 2;
    let inside = |bx: &([i32; 3], [i32; 3]), p: [i32; 3]| (0..3).all(|i| bx.0[i] * 2 <= p[i] && p[i] <= bx.1[i] * 2);
    for x in lo(0)..=hi(0) {
        for y in lo(1)..=hi(1) {
            for z in lo(2)..=hi(2) {
                if inside(&a, [x, y, z]) && inside(&b, [x, y, z]) {
                    return true;
                }
            }
        }
    }
    false
}

/// `pairs` random integer-cornered box pairs. Both outcomes must occur
/// often enough for the comparison to mean something.
pub fn check_intersections(seed: u64, pairs: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_box = |rng: &mut ChaCha8Rng| {
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        for i in 0..3 {
            lo[i] = rng.gen_range(-4..4);
            hi[i] = lo[i] + rng.gen_range(0..6);
        }
        (lo, hi)
    };
    let to_aabb = |(lo, hi): ([i32; 3], [i32; 3])| {
        Aabb::new(
            Point3::new(lo[0] as f64, lo[1] as f64, lo[2] as f64),
            Point3::new(hi[0] as f64, hi[1] as f64, hi[2] as f64),
        )
    };
    let mut hits = 0;
    for _ in 0..pairs {
        let a = random_box(&mut rng);
        let b = random_box(&mut rng);
        let got = to_aabb(a).intersects(&to_aabb(b));
        if got != lattice_oracle(a, b) {
            return Err(format!("intersects({a:?}, {b:?}) = {got}, sampling disagrees"));
        }
        hits += got as usize;
    }
    if hits * 10 < pairs || hits * 10 > pairs * 9 {
        return Err(format!("{hits} of {pairs} pairs intersect; sample is too one-sided"));
    }
    Ok(())
}
