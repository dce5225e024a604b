mod common;

use common::Uniform;
use pcmxbar_core::crossbar::{Crossbar, CrossbarConfig, Drive, Window};
use pcmxbar_core::drift::{drift_conductance, fit_nu, DriftParams};
use pcmxbar_core::fit::fit_line;
use pcmxbar_core::mapping::{decode_currents, encode_weights, input_to_voltage, WeightMapping};
use pcmxbar_core::noise::{NoiseModel, NoiseSynth};
use pcmxbar_core::Matrix;
use proptest::prelude::*;

const T0: f64 = 23e-6;

fn loaded(g: &Matrix, k: usize, noise: bool, seed: u64) -> Crossbar {
    let mut cfg = CrossbarConfig::new(g.rows(), g.cols());
    cfg.k_factor = k;
    cfg.enable_noise = noise;
    cfg.noise.seed = seed;
    let mut x = Crossbar::new(cfg).unwrap();
    x.load_conductances(g, &DriftParams::default()).unwrap();
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn drift_never_increases(g0 in 0.0f64..50.0, nu in 0.0f64..0.3, a in 0.0f64..20.0, b in 0.0f64..20.0) {
        let (ta, tb) = (T0 * a.exp(), T0 * (a + b).exp());
        let ga = drift_conductance(g0, T0, ta, nu).unwrap();
        let gb = drift_conductance(g0, T0, tb, nu).unwrap();
        prop_assert!(gb <= ga);
        prop_assert!(ga <= g0);
    }

    #[test]
    fn drift_fit_inverts_the_model(g0 in 0.1f64..50.0, nu in 0.0f64..0.2) {
        let times: Vec<f64> = (0..30).map(|k| T0 * 10f64.powf(k as f64 * 0.3)).collect();
        let g: Vec<f64> = times.iter().map(|t| drift_conductance(g0, T0, *t, nu).unwrap()).collect();
        let f = fit_nu(&times, &g, T0).unwrap();
        prop_assert!((f.nu_hat - nu).abs() < 1e-9);
        prop_assert!((f.g0_hat / g0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn line_fit_is_exact_on_lines(m in -5.0f64..5.0, c in -5.0f64..5.0, n in 3usize..40) {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.7 - 3.0).collect();
        let y: Vec<f64> = x.iter().map(|v| m * v + c).collect();
        let f = fit_line(&x, &y).unwrap();
        prop_assert!((f.slope - m).abs() < 1e-9);
        prop_assert!((f.intercept - c).abs() < 1e-9);
    }

    #[test]
    fn encoding_is_nonnegative_with_one_active_device(seed in any::<u64>(), rows in 1usize..12, cols in 1usize..12) {
        let w = Uniform::new(seed).matrix(rows, cols, -2.0, 2.0);
        let enc = encode_weights(&w, &WeightMapping::default()).unwrap();
        prop_assert_eq!(enc.g.shape(), (cols, 2 * rows));
        for j in 0..rows {
            for i in 0..cols {
                let (p, n) = (enc.g.get(i, 2 * j), enc.g.get(i, 2 * j + 1));
                prop_assert!(p >= 0.0 && n >= 0.0);
                if w.get(j, i) != 0.0 {
                    prop_assert!((p > 0.0) != (n > 0.0));
                }
            }
        }
    }

    #[test]
    fn decode_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut u = Uniform::new(seed);
        let i1 = u.vec(8, 0.0, 1e-6);
        let i2 = u.vec(8, 0.0, 1e-6);
        let mix: Vec<f64> = i1.iter().zip(&i2).map(|(x, y)| a * x + b * y).collect();
        let d1 = decode_currents(&i1, 5.0, 0.2).unwrap();
        let d2 = decode_currents(&i2, 5.0, 0.2).unwrap();
        let dm = decode_currents(&mix, 5.0, 0.2).unwrap();
        for ((x, y), m) in d1.iter().zip(&d2).zip(&dm) {
            prop_assert!((a * x + b * y - m).abs() < 1e-9);
        }
    }

    #[test]
    fn roundtrip_identity_for_any_k(seed in any::<u64>(), m in 1usize..10, n in 1usize..30, k_pick in 0usize..100) {
        let mut u = Uniform::new(seed);
        let w = u.matrix(m, n, -1.0, 1.0);
        let x = u.vec(n, 0.0, 1.0);
        let map = WeightMapping::default();
        let enc = encode_weights(&w, &map).unwrap();
        let k = 1 + k_pick % n;
        let mut cfg = CrossbarConfig::ideal(n, 2 * m);
        cfg.k_factor = k;
        let mut xb = Crossbar::new(cfg).unwrap();
        xb.load_conductances(&enc.g, &DriftParams::default()).unwrap();
        let i = xb.mvm(&input_to_voltage(&x, map.v_read).unwrap(), T0).unwrap();
        let y = decode_currents(&i, enc.scale, map.v_read).unwrap();
        let r = w.mul_vec(&x).unwrap();
        let bound: f64 = (0..m).map(|j| (0..n).map(|i| w.get(j, i).abs() * x[i]).sum::<f64>()).fold(0.0, f64::max);
        for (a, e) in y.iter().zip(&r) {
            prop_assert!((a - e).abs() <= 1e-9 * bound.max(1e-300));
        }
    }

    #[test]
    fn windows_agree_with_the_full_array(
        seed in any::<u64>(), r0 in 0usize..10, rl in 1usize..10, c0 in 0usize..6, cl in 1usize..6, k in 1usize..16
    ) {
        let (rows, cols) = (20, 12);
        let mut u = Uniform::new(seed);
        let g = u.matrix(rows, cols, 0.0, 5.0);
        let k = k.min(rows);
        let window = Window::new(r0..r0 + rl, c0..c0 + cl);
        let vw = u.matrix(rl, 3, 0.0, 0.2);
        let vfull = Matrix::from_fn(rows, 3, |r, b| if window.rows.contains(&r) { vw.get(r - r0, b) } else { 0.0 });
        let mut a = loaded(&g, k, true, seed);
        let mut b = loaded(&g, k, true, seed);
        let part = a.mvm_window(&window, Drive::Shared(&vw), &[5.0]).unwrap();
        let full = b.mvm_batch(&vfull, 5.0).unwrap();
        for (j, c) in window.cols.clone().enumerate() {
            for lane in 0..3 {
                prop_assert_eq!(part[0].get(j, lane).to_bits(), full.get(c, lane).to_bits());
            }
        }
        prop_assert_eq!(a.cell(r0, c0).noise_cursor, b.cell(r0, c0).noise_cursor);
    }

    #[test]
    fn cursor_reads_are_position_addressed(stream in 0u64..1000, start in 0u64..5000, len in 1usize..3000) {
        let m = NoiseModel::default();
        let mut s = NoiseSynth::new(&m).unwrap();
        let mut bulk = vec![0.0; len];
        s.fill_unit(stream, start, &mut bulk);
        let mut fresh = NoiseSynth::new(&m).unwrap();
        for probe in [0, len / 2, len - 1] {
            prop_assert_eq!(bulk[probe].to_bits(), fresh.unit_sample(stream, start + probe as u64).to_bits());
        }
    }
}
