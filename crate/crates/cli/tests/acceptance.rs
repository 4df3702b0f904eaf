//! End-to-end acceptance suite. Each test covers one release criterion,
//! checks it against independent oracles or fixtures, and prints a single
//! pass line on success.

use fetalsim_core::augment::{
    cc_kink, cc_thickening, cc_thinning, complete_agenesis, cortex_smoothing, cortex_thickening,
    cortex_thinning, partial_agenesis, posterior_fossa_hypoplasia, sample_plan, ventriculomegaly,
    ApEnd, AugmentationConfig, Laterality, ResolvedTransform,
};
use fetalsim_core::biomarkers::{cc_length, delta_growth, fit_growth_quadratic, NormativeCurve};
use fetalsim_core::components::{component_count, Connectivity};
use fetalsim_core::harmonize::{remap, LabelMap};
use fetalsim_core::metrics::{
    dice, evaluate, generalized_dice, hd95, volume_similarity, CC_REFERENCE_TOPOLOGY,
};
use fetalsim_core::metrics::euler_difference;
use fetalsim_core::nifti::{read_volume, write_volume, RawVolume, Volume};
use fetalsim_core::phantom::PhantomSpec;
use fetalsim_core::synth::{synthesize, SynthConfig};
use fetalsim_core::topology::{betti_numbers, euler_characteristic};
use fetalsim_core::{
    bounding_box, extract_mask, BinaryMask, GridMeta, IntensityVolume, LabelVolume, TissueLabel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn random_mask(n: usize, p: f64, rng: &mut ChaCha8Rng) -> BinaryMask {
    let meta = GridMeta::isotropic(n, 1.0);
    BinaryMask {
        meta,
        voxels: (0..meta.voxel_count())
            .map(|_| (rng.gen::<f64>() < p) as u8)
            .collect(),
    }
}

fn solid_box(meta: GridMeta, min: [usize; 3], max: [usize; 3]) -> BinaryMask {
    let mut m = BinaryMask::empty(meta);
    for z in min[2]..=max[2] {
        for y in min[1]..=max[1] {
            for x in min[0]..=max[0] {
                m.set(x, y, z, true);
            }
        }
    }
    m
}

/// Hollow ring in the z = const plane (square annulus).
fn ring_fixture(meta: GridMeta) -> BinaryMask {
    let mut m = solid_box(meta, [3, 3, 6], [10, 10, 8]);
    for z in 6..=8 {
        for y in 5..=8 {
            for x in 5..=8 {
                m.set(x, y, z, false);
            }
        }
    }
    m
}

#[test]
fn criterion_01_topology_suite() {
    let start = Instant::now();
    let meta = GridMeta::isotropic(14, 1.0);

    let ball = solid_box(meta, [3, 3, 3], [9, 9, 9]);
    let b = betti_numbers(&ball).unwrap();
    assert_eq!((b.b0, b.b1, b.b2), (1, 0, 0), "ball");

    let mut shell = solid_box(meta, [3, 3, 3], [9, 9, 9]);
    for z in 5..=7 {
        for y in 5..=7 {
            for x in 5..=7 {
                shell.set(x, y, z, false);
            }
        }
    }
    let b = betti_numbers(&shell).unwrap();
    assert_eq!((b.b0, b.b1, b.b2), (1, 0, 1), "shell");

    let b = betti_numbers(&ring_fixture(meta)).unwrap();
    assert_eq!((b.b0, b.b1, b.b2), (1, 1, 0), "ring");

    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for i in 0..200 {
        let mask = random_mask(16, rng.gen_range(0.2..0.8), &mut rng);
        let b = betti_numbers(&mask).unwrap();
        let chi = euler_characteristic(&mask);
        assert_eq!(
            b.b0 as i64 - b.b1 as i64 + b.b2 as i64,
            chi,
            "Betti/Euler mismatch on random mask {i}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "topology suite took {elapsed:?}");
    println!("criterion 01 (topology suite): pass ({elapsed:?})");
}

fn random_labels(n: usize, rng: &mut ChaCha8Rng) -> LabelVolume {
    let meta = GridMeta::new([n; 3], [0.5, 0.7, 1.1], Default::default()).unwrap();
    LabelVolume {
        meta,
        voxels: (0..meta.voxel_count()).map(|_| rng.gen_range(0..=8)).collect(),
    }
}

/// Brute-force directed distances: every foreground voxel of `a` against
/// every foreground voxel of `b`, voxel centers, mm.
fn directed_oracle(a: &BinaryMask, b: &BinaryMask) -> Vec<f64> {
    let s = a.meta.spacing;
    let fg = |m: &BinaryMask| -> Vec<[f64; 3]> {
        let mut out = Vec::new();
        let [nx, ny, nz] = m.meta.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if m.get(x, y, z) {
                        out.push([x as f64 * s[0], y as f64 * s[1], z as f64 * s[2]]);
                    }
                }
            }
        }
        out
    };
    let pa = fg(a);
    let pb = fg(b);
    pa.iter()
        .map(|p| {
            pb.iter()
                .map(|q| {
                    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn percentile_oracle(values: &mut Vec<f64>, p: f64) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let pos = p / 100.0 * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let f = pos - lo as f64;
    if f == 0.0 {
        values[lo]
    } else {
        values[lo] * (1.0 - f) + values[lo + 1] * f
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn criterion_02_metric_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for pair in 0..100 {
        let gt = random_labels(12, &mut rng);
        let pred = random_labels(12, &mut rng);
        let mut num = 0.0;
        let mut den = 0.0;
        for class in TissueLabel::TISSUES {
            let g = extract_mask(&gt, class);
            let p = extract_mask(&pred, class);
            let (ng, np) = (g.count() as f64, p.count() as f64);
            let inter = g
                .voxels
                .iter()
                .zip(&p.voxels)
                .filter(|(&a, &b)| a != 0 && b != 0)
                .count() as f64;
            if ng > 0.0 {
                let w = 1.0 / (ng * ng);
                num += w * inter;
                den += w * (ng + np);
            }
            if ng > 0.0 || np > 0.0 {
                assert!(
                    rel_close(dice(&g, &p).value.unwrap(), 2.0 * inter / (ng + np)),
                    "dice oracle, pair {pair} class {class:?}"
                );
                assert!(
                    rel_close(
                        volume_similarity(&g, &p).value.unwrap(),
                        1.0 - (np - ng).abs() / (np + ng)
                    ),
                    "vs oracle, pair {pair} class {class:?}"
                );
            }
            if ng > 0.0 && np > 0.0 {
                let mut ab = directed_oracle(&g, &p);
                let mut ba = directed_oracle(&p, &g);
                let expected =
                    percentile_oracle(&mut ab, 95.0).max(percentile_oracle(&mut ba, 95.0));
                assert!(
                    rel_close(hd95(&g, &p).value.unwrap(), expected),
                    "hd95 oracle, pair {pair} class {class:?}"
                );
            }
        }
        let (gdsc, _) = generalized_dice(&gt, &pred, &TissueLabel::TISSUES).unwrap();
        assert!(rel_close(gdsc, 2.0 * num / den), "gdsc oracle, pair {pair}");
    }

    // worked two-class example: gt sizes 100 and 10, overlaps 50 and 5,
    // weights (1e-4, 1e-2), gDSC = 0.11 / 0.22 = 0.5
    let meta = GridMeta::isotropic(12, 1.0);
    let mut gt = LabelVolume::filled(meta, TissueLabel::Background);
    let mut pred = LabelVolume::filled(meta, TissueLabel::Background);
    for i in 0..100 {
        gt.voxels[i] = TissueLabel::Wm.code();
    }
    for i in 50..150 {
        pred.voxels[i] = TissueLabel::Wm.code();
    }
    for i in 200..210 {
        gt.voxels[i] = TissueLabel::Cc.code();
    }
    for i in 205..215 {
        pred.voxels[i] = TissueLabel::Cc.code();
    }
    let (gdsc, excluded) =
        generalized_dice(&gt, &pred, &[TissueLabel::Wm, TissueLabel::Cc]).unwrap();
    assert_eq!(gdsc, 0.5);
    assert!(excluded.is_empty());
    println!("criterion 02 (metric formulas vs oracles): pass");
}

#[test]
fn criterion_03_euler_difference_contract() {
    let meta = GridMeta::isotropic(14, 1.0);
    let solid = solid_box(meta, [2, 2, 2], [6, 7, 8]);
    assert_eq!(euler_difference(&solid, CC_REFERENCE_TOPOLOGY), 0);

    let mut two = solid_box(meta, [2, 2, 2], [4, 4, 4]);
    for z in 8..=10 {
        for y in 8..=10 {
            for x in 8..=10 {
                two.set(x, y, z, true);
            }
        }
    }
    assert_eq!(euler_difference(&two, CC_REFERENCE_TOPOLOGY), 1);

    assert_eq!(
        euler_difference(&ring_fixture(meta), CC_REFERENCE_TOPOLOGY),
        1
    );
    println!("criterion 03 (Euler difference contract): pass");
}

fn acceptance_phantom(seed: u64) -> LabelVolume {
    PhantomSpec {
        dims: [64; 3],
        spacing: [1.0; 3],
        seed,
        surface_noise_amplitude: 0.02,
        surface_noise_scale_mm: 12.0,
    }
    .generate()
    .unwrap()
}

#[test]
fn criterion_04_augmentation_conservation() {
    let c = |l: TissueLabel| l.code() as usize;
    for seed in 0..20u64 {
        let vol = acceptance_phantom(seed);
        let before = vol.census();
        let cases: Vec<(ResolvedTransform, &[(usize, i64)])> = vec![
            // each case lists the labels allowed to change; gains must
            // mirror losses exactly (the sign column is indicative only)
            (ResolvedTransform::CompleteAgenesis, &[(8, -1), (4, 1)]),
            (
                ResolvedTransform::PartialAgenesis { fraction: 0.5, end: ApEnd::Anterior },
                &[(8, -1), (4, 1)],
            ),
            (ResolvedTransform::CcThinning { iterations: 1 }, &[(8, -1), (3, 1)]),
            (ResolvedTransform::CcThickening { radius: 1.5 }, &[(8, 1), (3, -1)]),
            (ResolvedTransform::CortexThickening { radius: 1.0 }, &[(2, 1), (3, -1)]),
            (ResolvedTransform::CortexThinning { radius: 1.0 }, &[(1, 1), (2, -1)]),
            (ResolvedTransform::CortexSmoothing { radius: 1.0 }, &[(2, 1), (1, -1)]),
            (
                ResolvedTransform::PosteriorFossaHypoplasia { iterations: 2 },
                &[(5, -1), (7, -1), (1, 1)],
            ),
        ];
        for (t, changed) in &cases {
            let out = t.apply(&vol).unwrap();
            assert!(out.voxels.iter().all(|&v| v <= 8), "{t:?} label closure");
            let after = out.census();
            let mutable: Vec<usize> = changed.iter().map(|&(l, _)| l).collect();
            let mut gain = 0i64;
            let mut loss = 0i64;
            for l in 0..9 {
                let d = after[l] as i64 - before[l] as i64;
                if !mutable.contains(&l) {
                    assert_eq!(d, 0, "{t:?} leaked into label {l} (seed {seed})");
                } else if d > 0 {
                    gain += d;
                } else {
                    loss -= d;
                }
            }
            assert_eq!(gain, loss, "{t:?} not conservative (seed {seed})");
        }

        // specific exact pairings
        let out = complete_agenesis(&vol).unwrap();
        let after = out.census();
        assert_eq!(
            after[c(TissueLabel::Vm)] - before[c(TissueLabel::Vm)],
            before[c(TissueLabel::Cc)],
            "complete agenesis: dCC = -dVM"
        );
        let out = cortex_thickening(&vol, 1.0).unwrap();
        let after = out.census();
        assert_eq!(
            after[c(TissueLabel::Gm)] - before[c(TissueLabel::Gm)],
            before[c(TissueLabel::Wm)] - after[c(TissueLabel::Wm)],
            "cortex thickening: dGM = -dWM"
        );

        // monotonicity
        let thin = cc_thinning(&vol, 1).unwrap();
        let m0 = extract_mask(&vol, TissueLabel::Cc);
        let m1 = extract_mask(&thin, TissueLabel::Cc);
        assert!(m1.voxels.iter().zip(&m0.voxels).all(|(a, b)| a <= b));
        let thick = cc_thickening(&vol, 1.5).unwrap();
        let m2 = extract_mask(&thick, TissueLabel::Cc);
        assert!(m2.voxels.iter().zip(&m0.voxels).all(|(a, b)| a >= b));

        // zero-severity parameters are bit-exact identities
        assert_eq!(cc_thickening(&vol, 0.0).unwrap(), vol);
        assert_eq!(cortex_thickening(&vol, 0.0).unwrap(), vol);
        assert_eq!(cortex_thinning(&vol, 0.0).unwrap(), vol);
        assert_eq!(cortex_smoothing(&vol, 0.0).unwrap(), vol);
        assert_eq!(posterior_fossa_hypoplasia(&vol, 0).unwrap(), vol);
        assert_eq!(cc_kink(&vol, 0.0, 1.0, 0.0).unwrap(), vol);
        assert_eq!(
            ventriculomegaly(&vol, 0.0, 5.0, Laterality::Bilateral).unwrap(),
            vol
        );
        assert_eq!(cc_thinning(&vol, 0).unwrap(), vol);
    }
    println!("criterion 04 (augmentation conservation, 20 phantoms): pass");
}

#[test]
fn criterion_05_warp_suite() {
    for seed in 0..5u64 {
        let vol = acceptance_phantom(seed);

        assert_eq!(cc_kink(&vol, 0.0, 1.0, 0.4).unwrap(), vol, "kink amplitude-0");

        let amplitude = 2.0;
        let kinked = cc_kink(&vol, amplitude, 1.0, 0.0).unwrap();
        let bb = bounding_box(&extract_mask(&vol, TissueLabel::Cc)).unwrap();
        let margins: [i64; 3] =
            std::array::from_fn(|a| (amplitude / vol.meta.spacing[a]).ceil() as i64 + 2);
        let [nx, ny, nz] = vol.meta.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let p = [x as i64, y as i64, z as i64];
                    let outside = (0..3).any(|a| {
                        p[a] < bb.min[a] as i64 - margins[a]
                            || p[a] > bb.max[a] as i64 + margins[a]
                    });
                    if outside {
                        assert_eq!(
                            vol.get(x, y, z),
                            kinked.get(x, y, z),
                            "kink moved a voxel outside its ROI"
                        );
                    }
                }
            }
        }
        let (n0, n1) = (vol.count(TissueLabel::Cc) as f64, kinked.count(TissueLabel::Cc) as f64);
        assert!((n1 - n0).abs() / n0 <= 0.10, "kink CC drift {n0} -> {n1}");

        let sigma = 5.0;
        let grown = ventriculomegaly(&vol, 2.0, sigma, Laterality::Bilateral).unwrap();
        assert!(
            grown.count(TissueLabel::Vm) > vol.count(TissueLabel::Vm),
            "ventriculomegaly must strictly grow VM"
        );
        // locality: unchanged beyond 4 sigma of every VM voxel (a superset
        // of the per-centroid cutoff balls)
        let vm = extract_mask(&vol, TissueLabel::Vm);
        let cutoff = 4.0 * sigma;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if vol.get(x, y, z) == grown.get(x, y, z) {
                        continue;
                    }
                    let p = vol.meta.position_mm(x, y, z);
                    let mut near = false;
                    'scan: for vz in 0..nz {
                        for vy in 0..ny {
                            for vx in 0..nx {
                                if vm.get(vx, vy, vz) {
                                    let q = vol.meta.position_mm(vx, vy, vz);
                                    let d2 = (0..3).map(|a| (p[a] - q[a]).powi(2)).sum::<f64>();
                                    if d2 <= cutoff * cutoff {
                                        near = true;
                                        break 'scan;
                                    }
                                }
                            }
                        }
                    }
                    assert!(near, "far-field voxel changed at ({x},{y},{z})");
                }
            }
        }
    }
    println!("criterion 05 (kink/ventriculomegaly warps): pass");
}

#[test]
fn criterion_06_posterior_fossa_guard() {
    // two cerebellar lobes joined by a single-voxel bridge
    let meta = GridMeta::isotropic(20, 1.0);
    let mut vol = LabelVolume::filled(meta, TissueLabel::Csf);
    for z in 8..12 {
        for y in 8..12 {
            for x in 2..8 {
                vol.set(x, y, z, TissueLabel::Cbm);
            }
            for x in 12..18 {
                vol.set(x, y, z, TissueLabel::Cbm);
            }
        }
    }
    for x in 8..12 {
        vol.set(x, 10, 10, TissueLabel::Cbm);
    }
    for z in 4..8 {
        for y in 8..12 {
            for x in 8..12 {
                vol.set(x, y, z, TissueLabel::Bsm);
            }
        }
    }
    for iterations in 1..=10 {
        let out = posterior_fossa_hypoplasia(&vol, iterations).unwrap();
        let m = extract_mask(&out, TissueLabel::Cbm);
        assert_eq!(
            component_count(&m, Connectivity::Corner26),
            1,
            "CBM split at {iterations} iterations"
        );
        assert!(!m.is_empty());
    }
    println!("criterion 06 (posterior fossa split guard): pass");
}

#[test]
fn criterion_07_biomarker_suite() {
    // phantom arch span: the CC annulus has outer radius 0.14 of the mean
    // in-plane extent; discretized, the axis projection spans 2*floor(r_out)
    let spec = PhantomSpec::compact();
    let vol = spec.generate().unwrap();
    let r_out = 0.14 * 0.5 * (spec.dims[1] + spec.dims[2]) as f64;
    let expected = 2.0 * r_out.floor() * spec.spacing[1];
    let measured = cc_length(&vol).value.unwrap();
    assert!(
        (measured - expected).abs() <= spec.spacing[1],
        "phantom CC length {measured} vs arch span {expected}"
    );

    let halved = partial_agenesis(&vol, 0.5, ApEnd::Anterior).unwrap();
    let half_len = cc_length(&halved).value.unwrap();
    assert!(
        (half_len - measured / 2.0).abs() <= spec.spacing[1],
        "partial agenesis f=0.5: {half_len} vs {}",
        measured / 2.0
    );

    let curve = NormativeCurve::synthetic_default();
    for ga in [20.0, 25.0, 30.0, 39.0] {
        let on_curve = curve.eval(ga).unwrap();
        assert_eq!(delta_growth(on_curve, ga, &curve).unwrap(), 0.0);
    }

    // quadratic fit vs an independent SVD least-squares oracle
    let planted = [42.0, -1.3, 0.21];
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let points: Vec<(f64, f64)> = (0..50)
        .map(|i| {
            let ga = 18.0 + 22.0 * i as f64 / 49.0;
            let y = planted[0] + planted[1] * ga + planted[2] * ga * ga
                + 0.05 * (rng.gen::<f64>() - 0.5);
            (ga, y)
        })
        .collect();
    let (coeffs, _res) = fit_growth_quadratic(&points).unwrap();
    let a = nalgebra::DMatrix::from_fn(points.len(), 3, |r, c| points[r].0.powi(c as i32));
    let y = nalgebra::DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let oracle = a.svd(true, true).solve(&y, 1e-12).unwrap();
    for k in 0..3 {
        let rel = (coeffs[k] - oracle[k]).abs() / oracle[k].abs().max(1e-12);
        assert!(rel < 1e-6, "coefficient {k}: {} vs {}", coeffs[k], oracle[k]);
        assert!((coeffs[k] - planted[k]).abs() < 0.05, "planted recovery {k}");
    }
    println!("criterion 07 (biomarkers): pass");
}

#[test]
fn criterion_08_mixing_ratio() {
    let start = Instant::now();
    let config = AugmentationConfig {
        p_augment: 0.5,
        ..Default::default()
    };
    let applied = (0..10_000u64)
        .filter(|&seed| sample_plan(&config, seed).unwrap().applied)
        .count();
    let fraction = applied as f64 / 10_000.0;
    assert!(
        (0.47..=0.53).contains(&fraction),
        "applied fraction {fraction} outside the binomial band"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "plan sampling took {elapsed:?}");
    println!("criterion 08 (mixing ratio {fraction}): pass ({elapsed:?})");
}

#[test]
fn criterion_09_worker_determinism() {
    let bin = env!("CARGO_BIN_EXE_fetalsim");
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("input.nii.gz");
    write_volume(
        &Volume::Labels(PhantomSpec::compact().generate().unwrap()),
        &input,
        true,
    )
    .unwrap();
    let mut reference: Option<Vec<(String, Vec<u8>)>> = None;
    for workers in [1usize, 2, 8] {
        let out_dir = dir.path().join(format!("w{workers}"));
        let status = std::process::Command::new(bin)
            .args([
                "synth",
                input.to_str().unwrap(),
                "--out-dir",
                out_dir.to_str().unwrap(),
                "--seed",
                "40",
                "--count",
                "8",
                "--workers",
                &workers.to_string(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out_dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .filter(|(name, _)| name.ends_with(".nii.gz"))
            .collect();
        files.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(files.len(), 16);
        match &reference {
            None => reference = Some(files),
            Some(r) => {
                for ((n0, b0), (n1, b1)) in r.iter().zip(&files) {
                    assert_eq!(n0, n1);
                    assert_eq!(b0, b1, "{n0} differs between worker counts");
                }
            }
        }
    }
    println!("criterion 09 (worker-count determinism): pass");
}

#[test]
fn criterion_10_harmonization() {
    // source scheme codes 0..=10 with the published target assignment
    let expected: [u8; 11] = [0, 1, 2, 3, 0, 4, 5, 6, 7, 3, 8];
    let meta = GridMeta::new([11, 1, 1], [1.0; 3], Default::default()).unwrap();
    let raw = RawVolume {
        meta,
        voxels: (0..=10).collect(),
    };
    let out = remap(&raw, &LabelMap::drawem_to_feta()).unwrap();
    assert_eq!(out.voxels, expected.to_vec());
    assert_eq!(out.voxels[9], 3, "code 9 (WM class) spot check");
    assert_eq!(out.voxels[4], 0, "code 4 (dropped class) spot check");
    println!("criterion 10 (label harmonization table): pass");
}

#[test]
fn criterion_11_io_and_end_to_end() {
    // NIfTI round trips, both datatypes, both compressions
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let labels = {
        // spacings exactly representable in the header's float32 fields
        let meta = GridMeta::new([9, 11, 13], [0.5, 0.5, 0.75], Default::default()).unwrap();
        LabelVolume {
            meta,
            voxels: (0..meta.voxel_count()).map(|_| rng.gen_range(0..=8)).collect(),
        }
    };
    let image = {
        let meta = labels.meta;
        IntensityVolume {
            meta,
            voxels: (0..meta.voxel_count()).map(|_| rng.gen::<f32>()).collect(),
        }
    };
    for (vol, stem) in [
        (Volume::Labels(labels.clone()), "lbl"),
        (Volume::Intensity(image.clone()), "img"),
    ] {
        for (ext, compress) in [("nii", false), ("nii.gz", true)] {
            let p = dir.path().join(format!("{stem}.{ext}"));
            write_volume(&vol, &p, compress).unwrap();
            assert_eq!(read_volume(&p).unwrap(), vol, "round trip {stem}.{ext}");
        }
    }

    // 256^3 end-to-end: phantom -> augment -> synthesize -> evaluate
    let start = Instant::now();
    let gt = PhantomSpec::default().generate().unwrap();
    assert_eq!(gt.meta.dims, [256; 3]);
    let config = AugmentationConfig {
        p_augment: 1.0,
        ..Default::default()
    };
    let plan = sample_plan(&config, 77).unwrap();
    let (augmented, _skips) = fetalsim_core::augment::apply_plan(&gt, &plan);
    let (img, _draw) = synthesize(&augmented, &SynthConfig::default(), 77).unwrap();
    assert_eq!(img.meta, gt.meta);
    let report = evaluate(&gt, &augmented, &TissueLabel::TISSUES, false).unwrap();
    assert!(report.gdsc > 0.0 && report.gdsc <= 1.0);
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "256^3 pipeline took {elapsed:?}"
    );
    println!("criterion 11 (I/O + 256^3 pipeline): pass ({elapsed:?})");
}
