mod common;

use iab_sim::beamforming::{
    combiner_mse, design_all, design_analog, greedy_hybrid, lmmse_iab, lmmse_ue,
    svd_digital_design, Architecture, Codebook, Codebooks, Duplex, Interference, LinkConfig,
};
use iab_sim::channel::FreqChannel;
use iab_sim::linalg::{real_diag, CMat, C64};
use iab_sim::metrics::{spectral_efficiency, upper_bound, Link, LinkPowers};
use iab_sim::montecarlo::Simulator;
use iab_sim::quantization::{AdcModel, AqnmOptions};
use proptest::prelude::*;
use rand::Rng;

use common::{cmat_from_parts, fro_sq, hermitian_eigenvalues, random_cmat, rng, small_config};

/// Least-squares residual of `target` on the given dictionary columns,
/// through nalgebra's SVD solver.
fn ls_residual(target: &CMat, dict: &CMat, cols: &[usize]) -> f64 {
    let a = CMat::from_fn(dict.nrows(), cols.len(), |r, c| dict[(r, cols[c])]);
    let x = a.clone().svd(true, true).solve(target, 1e-12).unwrap();
    fro_sq(&(target - a * x)).sqrt()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

#[test]
fn svd_design_diagonalizes_random_channel() {
    let mut r = rng(8);
    let h = FreqChannel {
        subcarriers: (0..3).map(|_| random_cmat(8, 8, &mut r)).collect(),
    };
    let d = svd_digital_design(&h, &h, 3, 3, 3).unwrap();
    for (k, hk) in h.subcarriers.iter().enumerate() {
        let sv: Vec<f64> = hermitian_eigenvalues(&(hk.adjoint() * hk))
            .iter()
            .map(|e| e.max(0.0).sqrt())
            .collect();
        let eff = d.w_iab[k].adjoint() * hk * &d.f_gnb[k];
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    assert!((eff[(i, i)].norm() - sv[i]).abs() < 1e-9 * sv[0]);
                } else {
                    assert!(eff[(i, j)].norm() < 1e-9 * sv[0]);
                }
            }
        }
        for m in [&d.f_gnb[k], &d.w_iab[k], &d.f_iab[k], &d.w_ue[k]] {
            assert!(fro_sq(&(m.adjoint() * m - CMat::identity(3, 3))).sqrt() <= 1e-10);
        }
    }
}

#[test]
fn greedy_matches_exhaustive_search() {
    let cb = Codebook::dft(8, 2).unwrap();
    let all = subsets(cb.len(), 4);
    assert_eq!(all.len(), 1820);
    let mut r = rng(21);
    // Generic targets: greedy can never beat the best subset.
    for _ in 0..5 {
        let target = random_cmat(8, 6, &mut r);
        let g = greedy_hybrid(&target, 4, &cb).unwrap();
        let best = all
            .iter()
            .map(|s| ls_residual(&target, &cb.columns, s))
            .fold(f64::INFINITY, f64::min);
        assert!(best <= g.residual(&target) + 1e-12);
    }
    // Sparse targets on codewords at least three indices apart (circularly):
    // the optimum is the generating subset, and greedy finds it. Adjacent
    // codewords of the oversampled dictionary correlate strongly enough to
    // mislead the greedy pick, so they are excluded here.
    let apart = |a: usize, b: usize| {
        let d = a.abs_diff(b);
        d.min(16 - d) >= 3
    };
    for _ in 0..20 {
        let mut cols: Vec<usize> = Vec::new();
        while cols.len() < 4 {
            let j = r.random_range(0..cb.len());
            if cols.iter().all(|&c| apart(c, j)) {
                cols.push(j);
            }
        }
        let a = CMat::from_fn(8, 4, |i, c| cb.columns[(i, cols[c])]);
        let coefs = CMat::from_fn(4, 6, |_, _| {
            C64::from_polar(r.random_range(0.5..1.0), r.random_range(0.0..6.3))
        });
        let target = a * coefs;
        let g = greedy_hybrid(&target, 4, &cb).unwrap();
        let (best_set, best) = all
            .iter()
            .map(|s| (s.clone(), ls_residual(&target, &cb.columns, s)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let mut picked = g.selected.clone();
        picked.sort_unstable();
        let mut want = cols.clone();
        want.sort_unstable();
        assert_eq!(best_set, want);
        assert_eq!(picked, want);
        assert!(g.residual(&target) < 1e-10 && best < 1e-10);
    }
}

#[test]
fn greedy_beats_single_columns() {
    let cb = Codebook::dft(16, 4).unwrap();
    let mut r = rng(33);
    let target = random_cmat(16, 8, &mut r);
    let g = greedy_hybrid(&target, 4, &cb).unwrap();
    let single = (0..cb.len())
        .map(|j| ls_residual(&target, &cb.columns, &[j]))
        .fold(f64::INFINITY, f64::min);
    assert!(g.residual(&target) <= single);
}

#[test]
fn complete_dft_codebook_recovers_anything() {
    let cb = Codebook::dft(8, 1).unwrap();
    let target = random_cmat(8, 5, &mut rng(4));
    assert!(greedy_hybrid(&target, 8, &cb).unwrap().residual(&target) < 1e-10);
}

#[test]
fn scalar_wiener_combiner() {
    let h = CMat::from_element(1, 1, C64::new(1.5, 0.5));
    for (snr, n_rf) in [(0.5, 1), (10.0, 3), (1e3, 2)] {
        let w = lmmse_ue(&h, snr, 1.0, n_rf, &CMat::zeros(1, 1), 1.0, 1).unwrap();
        let want = h[(0, 0)] / (h[(0, 0)].norm_sqr() + n_rf as f64 / snr);
        assert!((w[(0, 0)] - want).norm() < 1e-14);
    }
}

#[test]
fn infinite_resolution_reduces_to_mmse() {
    let mut r = rng(12);
    let h = random_cmat(4, 3, &mut r);
    let (snr, n_rf) = (7.0, 4);
    let w = lmmse_ue(&h, snr, 1.0, n_rf, &CMat::zeros(4, 4), snr, 2).unwrap();
    let m = &h * h.adjoint() + CMat::identity(4, 4) * C64::new(n_rf as f64 / snr, 0.0);
    let want = m.try_inverse().unwrap() * &h;
    assert!(fro_sq(&(w - want.columns(0, 2))) < 1e-24);
}

#[test]
fn infinite_sir_reduces_to_ue_form() {
    let mut r = rng(13);
    let h = random_cmat(4, 2, &mut r);
    let si = random_cmat(4, 2, &mut r);
    let rq = real_diag(&[0.1, 0.2, 0.05, 0.3]);
    let a = lmmse_iab(&h, &si, f64::INFINITY, 5.0, 0.9, 4, &rq, 5.0, 2).unwrap();
    let b = lmmse_ue(&h, 5.0, 0.9, 4, &rq, 5.0, 2).unwrap();
    assert_eq!(a, b);
}

#[test]
fn high_snr_limit_is_zero_forcing() {
    let mut r = rng(14);
    let h = random_cmat(3, 3, &mut r);
    let w = lmmse_ue(&h, 1e12, 1.0, 3, &CMat::zeros(3, 3), 1e12, 3).unwrap();
    let zf = (&h * h.adjoint()).try_inverse().unwrap() * &h;
    assert!(fro_sq(&(&w - &zf)).sqrt() < 1e-6 * fro_sq(&zf).sqrt());
    let leak = w.adjoint() * &h - CMat::identity(3, 3);
    assert!(fro_sq(&leak).sqrt() < 1e-6);
}

#[test]
fn combiner_is_a_local_mse_minimum() {
    let mut r = rng(15);
    let eps = 1e-4;
    for _ in 0..20 {
        let h = random_cmat(4, 2, &mut r);
        let si = random_cmat(4, 2, &mut r);
        let rq = real_diag(&(0..4).map(|_| r.random::<f64>()).collect::<Vec<_>>());
        let (snr, sir, alpha, rho) = (3.0, 0.5, 0.88, 3.0);
        let w = lmmse_iab(&h, &si, sir, snr, alpha, 4, &rq, rho, 2).unwrap();
        let inter = Some(Interference { h_bar_si: &si, sir });
        let base = combiner_mse(&w, &h, inter, snr, alpha, 4, &rq, rho).unwrap();
        for col in 0..2 {
            for sign in [1.0, -1.0] {
                let dir = random_cmat(4, 1, &mut r);
                let dir = &dir * C64::new(sign * eps / fro_sq(&dir).sqrt(), 0.0);
                let mut wp = w.clone();
                let mut c = wp.column_mut(col);
                c += &dir.column(0);
                let mse = combiner_mse(&wp, &h, inter, snr, alpha, 4, &rq, rho).unwrap();
                assert!(mse >= base, "perturbation lowered the MSE: {mse} < {base}");
            }
        }
    }
}

#[test]
fn strong_self_interference_is_nulled() {
    // With four RF chains against two desired and two interfering streams the
    // combiner can null the SI; compare the leakage of the unit-norm
    // combiner columns with that of an isotropic unit-norm combiner,
    // ‖H̄_SI‖²_F / N_RF per column.
    let mut r = rng(16);
    for _ in 0..100 {
        let h = random_cmat(4, 2, &mut r);
        let si = random_cmat(4, 2, &mut r);
        let w = lmmse_iab(&h, &si, 1e-4, 10.0, 1.0, 4, &CMat::zeros(4, 4), 10.0, 2).unwrap();
        let mut leak = 0.0;
        for c in w.column_iter() {
            let u = c.clone_owned() / C64::new(c.norm(), 0.0);
            leak += (u.adjoint() * &si)
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>();
        }
        let reference = 2.0 * fro_sq(&si) / 4.0;
        let suppression_db = 10.0 * (reference / leak).log10();
        assert!(suppression_db >= 30.0, "only {suppression_db:.1} dB");
    }
}

#[test]
fn hybrid_precoders_meet_power_constraint() {
    let cfg = small_config();
    let sim = Simulator::new(cfg.clone()).unwrap();
    for seed in 0..5 {
        let ch = sim.draw_channels(seed).unwrap();
        let l = &cfg.link;
        let d = svd_digital_design(&ch.backhaul, &ch.access, l.ns_gnb, l.ns_iab, l.ns_ue).unwrap();
        let a = design_analog(&d, Architecture::Hybrid, l, sim.codebooks()).unwrap();
        for k in 0..ch.backhaul.len() {
            assert!((fro_sq(&(&a.f_rf_gnb * &a.f_bb_gnb[k])) - l.ns_gnb as f64).abs() <= 1e-9);
            assert!((fro_sq(&(&a.f_rf_iab * &a.f_bb_iab[k])) - l.ns_iab as f64).abs() <= 1e-9);
        }
    }
}

#[test]
fn hybrid_with_complete_codebook_equals_digital() {
    let mut cfg = small_config();
    cfg.link = LinkConfig {
        rf_gnb: 8,
        rf_iab_tx: 8,
        rf_iab_rx: 8,
        rf_ue: 4,
        oversampling: 1,
        ..LinkConfig::default()
    };
    let sim = Simulator::new(cfg.clone()).unwrap();
    let books = Codebooks::dft(8, 8, 8, 4, 1).unwrap();
    let adc = AdcModel::ideal();
    let opts = AqnmOptions::default();
    for seed in 0..5 {
        let ch = sim.draw_channels(seed).unwrap();
        for snr_db in [0.0, 10.0] {
            let p = cfg.powers(snr_db);
            let se = |arch| {
                let beams = design_all(
                    &ch,
                    &cfg.link,
                    arch,
                    &books,
                    &p,
                    &adc,
                    &adc,
                    Duplex::Full,
                    &opts,
                )
                .unwrap();
                [Link::Backhaul, Link::Access].map(|link| {
                    spectral_efficiency(link, &beams, &ch, &p, &adc, Duplex::Full, &opts).unwrap()
                })
            };
            let (hyb, dig) = (se(Architecture::Hybrid), se(Architecture::AllDigital));
            for i in 0..2 {
                assert!(
                    (hyb[i] - dig[i]).abs() <= 1e-6,
                    "seed {seed}: {hyb:?} vs {dig:?}"
                );
            }
        }
    }
}

#[test]
fn digital_ideal_interference_free_link_attains_bound() {
    let cfg = small_config();
    let sim = Simulator::new(cfg.clone()).unwrap();
    let adc = AdcModel::ideal();
    let opts = AqnmOptions::default();
    for seed in 0..5 {
        let ch = sim.draw_channels(seed).unwrap();
        let p = LinkPowers::from_db(10.0, f64::INFINITY, 1.0);
        let beams = design_all(
            &ch,
            &cfg.link,
            Architecture::AllDigital,
            sim.codebooks(),
            &p,
            &adc,
            &adc,
            Duplex::Half,
            &opts,
        )
        .unwrap();
        let se = spectral_efficiency(Link::Backhaul, &beams, &ch, &p, &adc, Duplex::Half, &opts)
            .unwrap();
        let bound = upper_bound(&ch.backhaul, p.snr_b(), cfg.link.ns_gnb).unwrap();
        assert!((se - bound).abs() <= 1e-9 * bound, "{se} vs {bound}");
    }
}

#[test]
fn design_is_deterministic() {
    let cfg = small_config();
    let sim = Simulator::new(cfg.clone()).unwrap();
    let ch = sim.draw_channels(1).unwrap();
    let p = cfg.powers(10.0);
    let adc = AdcModel::new(cfg.adc_bits).unwrap();
    let run = || {
        design_all(
            &ch,
            &cfg.link,
            Architecture::Hybrid,
            sim.codebooks(),
            &p,
            &adc,
            &adc,
            Duplex::Full,
            &cfg.aqnm,
        )
        .unwrap()
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_residual_is_monotone(parts in prop::collection::vec(-1.0f64..1.0, 2 * 8 * 3)) {
        let target = cmat_from_parts(8, 3, &parts);
        let cb = Codebook::dft(8, 4).unwrap();
        let mut last = fro_sq(&target).sqrt();
        let mut prev_sel: Vec<usize> = Vec::new();
        for n_rf in 1..=8 {
            let g = greedy_hybrid(&target, n_rf, &cb).unwrap();
            prop_assert_eq!(&g.selected[..prev_sel.len()], &prev_sel[..]);
            let res = g.residual(&target);
            prop_assert!(res <= last + 1e-12);
            last = res;
            prev_sel = g.selected;
        }
    }

    #[test]
    fn greedy_recovers_in_dictionary_targets(picks in prop::collection::btree_set(0usize..8, 1..=4),
                                              parts in prop::collection::vec(-1.0f64..1.0, 2 * 4 * 3)) {
        // Unitary DFT dictionary: any combination of n_rf codewords is
        // recovered exactly.
        let cb = Codebook::dft(8, 1).unwrap();
        let cols: Vec<usize> = picks.into_iter().collect();
        let a = CMat::from_fn(8, cols.len(), |i, c| cb.columns[(i, cols[c])]);
        let coefs = cmat_from_parts(cols.len(), 3, &parts[..2 * cols.len() * 3]);
        let target = a * coefs;
        prop_assume!(fro_sq(&target) > 1e-6);
        let g = greedy_hybrid(&target, cols.len(), &cb).unwrap();
        prop_assert!(g.residual(&target) <= 1e-9 * fro_sq(&target).sqrt());
    }
}
