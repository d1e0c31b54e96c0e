mod common;

use adasi_core::dnn::{dnn_eta, split_regions, DnnOracle, PlNet, SalientSplit};
use adasi_core::{Error, LineParam, SelectionOracle};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::normal;

struct Case {
    net: PlNet,
    line: LineParam,
    split: SalientSplit,
    oracle: DnnOracle,
}

fn case(rng: &mut ChaCha8Rng, d: usize, net_seed: u64) -> Case {
    let net = PlNet::desk(d, net_seed).unwrap();
    loop {
        let image = DVector::from_fn(d * d, |_, _| normal(rng));
        let (s, _) = net.forward_with_pattern(&image).unwrap();
        let split = match split_regions(&s, 0.0) {
            Ok(split) => split,
            Err(Error::DegenerateSplit(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        let eta = dnn_eta(&split, d * d);
        let line = LineParam::for_contrast(&eta, &image).unwrap();
        let oracle = DnnOracle::new(net.clone(), 0.0, line.clone(), split.clone()).unwrap();
        return Case {
            net,
            line,
            split,
            oracle,
        };
    }
}

#[test]
fn regions_are_faithful_to_forward_passes() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..10 {
        let c = case(&mut rng, 8, trial);
        let anchor = c.line.z_obs + rng.random_range(-2.0..2.0);
        let resp = c.oracle.query(anchor).unwrap();
        let (s0, pattern0) = c.net.forward_with_pattern(&c.line.at(anchor)).unwrap();
        let split0 = split_regions(&s0, 0.0).ok();
        let ends: Vec<f64> = resp
            .oc_region
            .parts()
            .iter()
            .flat_map(|p| [p.lo(), p.hi()])
            .filter(|e| e.is_finite())
            .collect();
        let (lo, hi) = match (ends.first(), ends.last()) {
            (Some(&a), Some(&b)) => (a - 1.0, b + 1.0),
            _ => (anchor - 5.0, anchor + 5.0),
        };
        for i in 0..1000 {
            let z = lo + (hi - lo) * (i as f64 + 0.5) / 1000.0;
            if ends.iter().any(|e| (e - z).abs() < 1e-6) {
                continue;
            }
            let (s, pattern) = c.net.forward_with_pattern(&c.line.at(z)).unwrap();
            let same = pattern == pattern0 && split_regions(&s, 0.0).ok() == split0;
            assert_eq!(same, resp.oc_region.contains(z), "trial {trial}, z = {z}");
        }
    }
}

#[test]
fn saliency_is_affine_inside_a_region() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for trial in 0..5 {
        let c = case(&mut rng, 8, 100 + trial);
        let z0 = c.line.z_obs;
        let (_, _, (p, q), _) = c.oracle.piece(z0);
        let region = c.oracle.query(z0).unwrap().oc_region;
        let part = *region.part_containing(z0).unwrap();
        let lo = part.lo().max(z0 - 10.0);
        let hi = part.hi().min(z0 + 10.0);
        for i in 0..100 {
            let z = lo + (hi - lo) * (i as f64 + 0.5) / 100.0;
            let (s, _) = c.net.forward_with_pattern(&c.line.at(z)).unwrap();
            let affine = &p + &q * z;
            for k in 0..s.len() {
                assert!((s[k] - affine[k]).abs() <= 1e-8 * s[k].abs().max(1.0));
            }
        }
    }
}

#[test]
fn observed_point_matches_and_output_is_the_salient_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let c = case(&mut rng, 8, 5);
    let resp = c.oracle.query(c.line.z_obs).unwrap();
    assert!(resp.matches_observed);
    assert_eq!(resp.output_id, c.split.salient);
    for i in 0..100 {
        let z = c.line.z_obs - 10.0 + 0.2 * i as f64;
        let resp = c.oracle.query(z).unwrap();
        let (s, _) = c.net.forward_with_pattern(&c.line.at(z)).unwrap();
        let split = split_regions(&s, 0.0).ok();
        assert_eq!(resp.matches_observed, split.as_ref() == Some(&c.split));
    }
}

#[test]
fn thresholds_nest() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let s = DVector::from_fn(64, |_, _| normal(&mut rng));
    let low = split_regions(&s, -0.5).unwrap();
    let high = split_regions(&s, 0.5).unwrap();
    assert!(high.salient.iter().all(|i| low.salient.contains(i)));
}
