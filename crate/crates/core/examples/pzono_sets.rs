//! Builds two 2D p-Zonotopes, combines them and checks how many samples of
//! each member fall inside the union's 95% cut.

use ila::pzono::{confidence_cut, enclose_union, minkowski_sum, zonotope_size, PZonotope, WeightVector};
use nalgebra::{dmatrix, dvector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> ila::Result<()> {
    let a = PZonotope::new(dvector![0.0, 0.0], dmatrix![1.0, 0.5; 0.0, 0.5], dmatrix![0.2, 0.0; 0.0, 0.1])?;
    let b = PZonotope::new(dvector![3.0, 1.0], dmatrix![0.3; 0.3], dmatrix![0.5, 0.1; 0.1, 0.4])?;
    let w = WeightVector::uniform(2);

    let sum = minkowski_sum(&a, &b)?;
    println!("sum center {:?}, {} generators", sum.center().as_slice(), sum.num_generators());

    let union = enclose_union(&[a.clone(), b.clone()])?;
    let cut = confidence_cut(&union, 0.95)?;
    let (lo, hi) = cut.interval_hull();
    println!("union 95% cut hull x [{:.3}, {:.3}] y [{:.3}, {:.3}]", lo[0], hi[0], lo[1], hi[1]);
    for (name, p) in [("a", &a), ("b", &b), ("union", &union)] {
        println!("size of {name} at 95%: {:.4}", zonotope_size(&confidence_cut(p, 0.95)?, &w)?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, p) in [("a", &a), ("b", &b)] {
        let n = 10_000;
        let inside = (0..n).filter(|_| cut_contains(&cut, &sample(p, &mut rng))).count();
        println!("samples of {name} inside union cut: {:.2}%", 100.0 * inside as f64 / n as f64);
    }
    Ok(())
}

/// Draws from one density of the family: a uniform mean in the zonotope plus
/// Gaussian noise with the set covariance.
fn sample(p: &PZonotope, rng: &mut impl Rng) -> nalgebra::DVector<f64> {
    let beta = nalgebra::DVector::from_fn(p.num_generators(), |_, _| rng.random_range(-1.0..=1.0));
    let z = nalgebra::DVector::from_fn(p.dim(), |_, _| StandardNormal.sample(rng));
    let l = p.covariance().clone().cholesky().map(|c| c.l()).unwrap();
    p.center() + p.generators() * beta + l * z
}

/// Point membership in a 2D zonotope through its halfspace form.
fn cut_contains(z: &ila::pzono::Zonotope, x: &nalgebra::DVector<f64>) -> bool {
    let d = x - z.center();
    let g = z.generators();
    (0..g.ncols()).all(|i| {
        let n = nalgebra::Vector2::new(-g[(1, i)], g[(0, i)]);
        if n.norm() == 0.0 {
            return true;
        }
        let reach: f64 = (0..g.ncols()).map(|j| (n[0] * g[(0, j)] + n[1] * g[(1, j)]).abs()).sum();
        (n[0] * d[0] + n[1] * d[1]).abs() <= reach + 1e-9
    })
}
