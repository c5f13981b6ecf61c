// Scratch check of the core numerics; deleted before the repo is final.
use cachemodel::popularity::PopularityLaw;
use cachemodel::{gaussian, lru, random_replacement as rr};

fn main() {
    // Closed form: explicit uniform q=0.01, N=100, C=50 -> t_C = ln2/0.01
    let law = PopularityLaw::explicit(vec![0.01; 100]).unwrap();
    let sol = lru::solve_characteristic_time(&law, 50.0).unwrap();
    println!("uniform t_C = {:.10} (expect {:.10})", sol.t_c, (2f64).ln() / 0.01);

    // Zipf(0.8) N=1e4: m(1000) exact vs brute force
    let zipf = PopularityLaw::zipf(0.8, 10_000).unwrap();
    let mut brute = 0.0;
    for n in 1..=10_000u64 {
        brute += 1.0 - (-(n as f64).powf(-0.8) * 1000.0).exp();
    }
    println!("m(1000) = {:.12}, brute {:.12}", lru::mean_occupancy(&zipf, 1000.0), brute);

    // t_C zipf(0.8) N=1e4 C=100 via solver
    let s = lru::solve_characteristic_time(&zipf, 100.0).unwrap();
    println!("zipf t_C(C=100) = {:.12} iters {} resid {:.2e}", s.t_c, s.iterations, s.residual);
    let s2 = lru::solve_characteristic_time(&zipf, 1000.0).unwrap();
    println!("zipf t_C(C=1000) = {:.12}", s2.t_c);

    // Segmentation accuracy: zipf(0.8) N=1e6 parametric (grid) vs exact
    let big = PopularityLaw::zipf(0.8, 1_000_000).unwrap();
    let grid = big.segmentation(4e-4).unwrap();
    println!("grid segments = {}", grid.segment_count());
    let mut exact = 0.0f64;
    for n in 1..=1_000_000u64 {
        exact += 1.0 - (-(n as f64).powf(-0.8) * 5e4).exp();
    }
    let approx = grid.sum(|q| -(-q * 5e4f64).exp_m1());
    println!("m grid rel err = {:.3e}", (approx - exact).abs() / exact);

    // total mass of zipf 1e11 via grid (compare Euler-Maclaurin estimate)
    let huge = PopularityLaw::zipf(0.8, 100_000_000_000).unwrap();
    let t0 = std::time::Instant::now();
    let mass = huge.total_mass();
    println!("huge mass = {:.6} in {:?} ({} segs)", mass, t0.elapsed(), huge.segmentation(4e-4).unwrap().segment_count());
    // Euler-Maclaurin: zeta(0.8) + N^{0.2}/0.2 + 0.5 N^{-0.8}
    let n = 1e11f64;
    let zeta08 = -1.2852650618; // zeta(0.8), published value
    let em = zeta08 + n.powf(0.2) / 0.2 + 0.5 * n.powf(-0.8);
    println!("huge mass EM estimate = {:.6}, rel err = {:.3e}", em, (mass - em).abs() / em);

    // big solve timing at C = 1e9
    let t0 = std::time::Instant::now();
    let sh = lru::solve_characteristic_time(&huge, 1e9).unwrap();
    println!("huge t_C(C=1e9) = {:.6e} in {:?} ({} iters)", sh.t_c, t0.elapsed(), sh.iterations);

    // random fixed point, uniform closed form tau = C(N-1)/(N-C) = 99
    let u = PopularityLaw::uniform(100).unwrap();
    let r = rr::solve_characteristic_constant(&u, 50.0).unwrap();
    println!("uniform tau_C = {:.10} (expect 99)", r.tau_c);

    // psi checks
    println!("psi_0.8(0) = {:?}", gaussian::psi(0.8, 0.0).unwrap());
    println!("psi_0.8(1) = {:.12}", gaussian::psi(0.8, 1.0).unwrap());
    let b = gaussian::psi_inverse(0.8, 0.5).unwrap();
    println!("psi_inv_0.8(0.5) = {:.12}, psi back = {:.12}", b, gaussian::psi(0.8, b).unwrap());
    // tc_asymptotic vs solver at N=1e4, delta=0.5
    let tca = gaussian::tc_asymptotic(0.8, 10_000, 0.5).unwrap();
    let tcs = lru::solve_characteristic_time(&zipf, 5000.0).unwrap().t_c;
    println!("tc_asym = {:.4}, solver = {:.4}, ratio = {:.6}", tca, tcs, tca / tcs);

    // erfc hit rate at Figure-4 parameters
    let h_erfc = gaussian::erfc_hit_rate(&zipf, 100.0, 0.83e-3).unwrap();
    let h_che = lru::hit_rate(0.83e-3, s.t_c);
    println!("erfc h = {:.6}, che h = {:.6}, gap = {:.6}", h_erfc, h_che, (h_erfc - h_che).abs());
}
