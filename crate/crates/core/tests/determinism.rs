//! Parallel estimators must give bit-identical results whatever the size of
//! the thread pool.

use selgen::fitnesswf::FitnessSpec;
use selgen::frontprop::{gumbel_speed_reference, NoiseSpec};
use selgen::genealogy::{conditional_cn, estimate_cn, PopulationModel};
use selgen::moments::eta_moment_mc;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn same_across_pools<T: PartialEq + std::fmt::Debug + Send>(f: impl Fn() -> T + Sync) {
    let one = in_pool(1, &f);
    let many = in_pool(5, &f);
    assert_eq!(one, many);
}

#[test]
fn wf_cn_estimate() {
    let model = PopulationModel::Wf { fitness: FitnessSpec::ParetoTail { alpha: 1.3 } };
    same_across_pools(|| estimate_cn(&model, 300, 4, 5000, 17).unwrap());
}

#[test]
fn front_cn_estimate() {
    let model = PopulationModel::Front { noise: NoiseSpec::Gumbel { rho: 0.0, beta: 1.0 }, beta: 1.0, burn_in: 5 };
    same_across_pools(|| estimate_cn(&model, 60, 3, 3000, 18).unwrap());
}

#[test]
fn conditional_estimator() {
    same_across_pools(|| conditional_cn(&FitnessSpec::InverseExponential, 500, 3000, 19).unwrap());
}

#[test]
fn moment_monte_carlo() {
    same_across_pools(|| eta_moment_mc(&FitnessSpec::ExponentialY, 8, &[2, 2], 50_000, 20).unwrap());
}

#[test]
fn speed_reference() {
    same_across_pools(|| gumbel_speed_reference(50, 0.3, 2.0, 20_000, 21).unwrap());
}

#[test]
fn seeds_matter() {
    let a = conditional_cn(&FitnessSpec::InverseExponential, 500, 3000, 1).unwrap();
    let b = conditional_cn(&FitnessSpec::InverseExponential, 500, 3000, 2).unwrap();
    assert_ne!(a, b);
}
