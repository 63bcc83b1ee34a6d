//! Gap between the symmetrized observable `E_sym[phi](Z)` and the
//! polynomial `R^l[phi](mu_Z)`.

use super::observable::ObservableProduct;
use crate::state::ParticleState;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetrizationGap {
    pub symmetrized: f64,
    pub polynomial: f64,
    pub gap: f64,
    /// `2 l^2 ||phi||_inf / N`.
    pub bound: f64,
}

impl SymmetrizationGap {
    pub fn holds(&self) -> bool {
        self.gap <= self.bound
    }
}

/// Visits the set partitions of `{0, .., l-1}` as lists of block bitmasks.
fn for_each_partition(l: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(j: usize, l: usize, blocks: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if j == l {
            f(blocks);
            return;
        }
        for b in 0..blocks.len() {
            blocks[b] |= 1 << j;
            rec(j + 1, l, blocks, f);
            blocks[b] &= !(1 << j);
        }
        blocks.push(1 << j);
        rec(j + 1, l, blocks, f);
        blocks.pop();
    }
    rec(0, l, &mut Vec::new(), f);
}

/// Mean of `prod_j phi_j(z_{i_j})` over all injective index tuples, which
/// equals the average of `phi(z_{s(1)}, .., z_{s(l)})` over permutations `s`.
/// Computed in `O(2^l N)` by Moebius inversion on the partition lattice.
pub fn injective_tuple_mean(state: &ParticleState, obs: &ObservableProduct) -> Result<f64> {
    let l = obs.ell();
    let n = state.n_particles();
    if l > 16 {
        return Err(Error::invalid("observables with more than 16 factors are not supported"));
    }
    if n < l {
        return Err(Error::invalid(format!("need N >= l, got N = {n}, l = {l}")));
    }
    obs.check_dim(state.dim())?;
    if l == 1 {
        let f = &obs.factors[0];
        return Ok(state.particles().map(|z| f.eval(z)).sum::<f64>() / n as f64);
    }
    let mut sums = vec![0.0; 1 << l];
    let mut vals = vec![0.0; l];
    let mut prod = vec![0.0; 1 << l];
    for z in state.particles() {
        for (v, f) in vals.iter_mut().zip(&obs.factors) {
            *v = f.eval(z);
        }
        prod[0] = 1.0;
        for mask in 1usize..(1 << l) {
            let low = mask.trailing_zeros() as usize;
            prod[mask] = prod[mask & (mask - 1)] * vals[low];
            sums[mask] += prod[mask];
        }
    }
    let mut total = 0.0;
    for_each_partition(l, &mut |blocks| {
        let mut term = 1.0;
        for &b in blocks {
            let k = b.count_ones() as usize;
            // (-1)^{k-1} (k-1)!
            let mu: f64 = (1..k).map(|i| -(i as f64)).product();
            term *= mu * sums[b as usize];
        }
        total += term;
    });
    let falling: f64 = (0..l).map(|i| (n - i) as f64).product();
    Ok(total / falling)
}

/// `E_sym` by literal enumeration of all `N!` permutations. Only for
/// `N <= 10`.
pub fn symmetrize_over_permutations(state: &ParticleState, obs: &ObservableProduct) -> Result<f64> {
    let n = state.n_particles();
    let l = obs.ell();
    if n > 10 {
        return Err(Error::invalid("literal permutation sums are limited to N <= 10"));
    }
    if n < l {
        return Err(Error::invalid(format!("need N >= l, got N = {n}, l = {l}")));
    }
    obs.check_dim(state.dim())?;
    // Heap's algorithm.
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let eval = |p: &[usize]| obs.factors.iter().enumerate().map(|(j, f)| f.eval(state.particle(p[j]))).product::<f64>();
    let mut total = eval(&perm);
    let mut count = 1u64;
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            total += eval(&perm);
            count += 1;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(total / count as f64)
}

/// `|E_sym[phi](Z) - R^l[phi](mu_Z)|` with its bound. Requires `N >= 2l`.
pub fn symmetrization_gap(state: &ParticleState, obs: &ObservableProduct) -> Result<SymmetrizationGap> {
    let n = state.n_particles();
    let l = obs.ell();
    if n < 2 * l {
        return Err(Error::invalid(format!("the symmetrization bound needs N >= 2l, got N = {n}, l = {l}")));
    }
    let symmetrized = injective_tuple_mean(state, obs)?;
    let polynomial = super::observable::poly_observable(&state.empirical(), obs);
    Ok(SymmetrizationGap {
        symmetrized,
        polynomial,
        gap: (symmetrized - polynomial).abs(),
        bound: 2.0 * (l * l) as f64 * obs.sup_norm() / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::state::gaussian_sample_state;

    fn brute_injective(state: &ParticleState, obs: &ObservableProduct) -> f64 {
        let n = state.n_particles();
        let l = obs.ell();
        let mut idx = vec![0usize; l];
        let (mut sum, mut count) = (0.0, 0u64);
        loop {
            let distinct = (0..l).all(|a| (0..a).all(|b| idx[a] != idx[b]));
            if distinct {
                sum += obs.factors.iter().zip(&idx).map(|(f, &i)| f.eval(state.particle(i))).product::<f64>();
                count += 1;
            }
            let mut k = 0;
            loop {
                if k == l {
                    return sum / count as f64;
                }
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn partition_counts_are_bell_numbers() {
        for (l, bell) in [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52)] {
            let mut c = 0;
            for_each_partition(l, &mut |_| c += 1);
            assert_eq!(c, bell);
        }
    }

    #[test]
    fn three_routes_agree() {
        let mut rng = RngStream::new(61, 0);
        let obs = [
            "tanh:0,1",
            "tanh:0,1*cos:1,2",
            "gaussian_bump:1*clipped:0,1*tanh:1,0.5",
            "cos:0,1*cos:0,2*tanh:1,1*gaussian_bump:2",
        ];
        for name in obs {
            let o = ObservableProduct::from_name(name).unwrap();
            for n in [o.ell(), 5, 7] {
                let s = gaussian_sample_state(&[0.0, 0.5], &[1.0, 2.0], n, &mut rng).unwrap();
                let fast = injective_tuple_mean(&s, &o).unwrap();
                let brute = brute_injective(&s, &o);
                let perm = symmetrize_over_permutations(&s, &o).unwrap();
                assert!((fast - brute).abs() < 1e-13, "{name} n={n}: {fast} vs {brute}");
                assert!((perm - brute).abs() < 1e-13, "{name} n={n}: {perm} vs {brute}");
            }
        }
    }

    #[test]
    fn examples() {
        let s = ParticleState::new(1, vec![0.0, 1.0, 0.0, 1.0], 0.0).unwrap();
        let o = ObservableProduct::from_name("unit_interval:0*unit_interval:0").unwrap();
        let g = symmetrization_gap(&s, &o).unwrap();
        // pairs of distinct particles both at 1: 2 of 12 ordered pairs.
        assert!((g.symmetrized - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(g.polynomial, 0.25);
        assert!(g.holds());
        let s = ParticleState::new(1, vec![0.3; 6], 0.0).unwrap();
        let g = symmetrization_gap(&s, &ObservableProduct::from_name("tanh:0,1*cos:0,1*cos:0,3").unwrap()).unwrap();
        assert!(g.gap < 1e-15);
        let s = ParticleState::new(1, vec![0.0; 3], 0.0).unwrap();
        assert!(symmetrization_gap(&s, &o).is_err());
    }
}
