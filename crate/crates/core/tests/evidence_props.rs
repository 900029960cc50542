use gridfuse::evidence::{
    belief, dempster_combine, pignistic, plausibility, uncertainty_interval, validate_mass, FocalSet, Frame,
    MassFunction,
};
use proptest::prelude::*;

/// A frame of 1..=max hypotheses and a mass function on it.
fn frame_and_mass(max: usize) -> impl Strategy<Value = (Frame, MassFunction)> {
    (1..=max).prop_flat_map(|p| {
        let subsets = (1u16 << p) - 1;
        prop::collection::vec((1..=subsets, 0.01f64..1.0), 1..6).prop_map(move |entries| {
            let frame = Frame::new((0..p).map(|i| format!("h{i}"))).unwrap();
            let total: f64 = entries.iter().map(|e| e.1).sum();
            let m = MassFunction::new(frame.clone(), entries.into_iter().map(|(s, v)| (FocalSet(s), v / total))).unwrap();
            (frame, m)
        })
    })
}

fn masses_on(frame: &Frame, n: usize) -> impl Strategy<Value = Vec<MassFunction>> {
    let frame = frame.clone();
    let subsets = (1u16 << frame.len()) - 1;
    prop::collection::vec(prop::collection::vec((1..=subsets, 0.01f64..1.0), 1..6), n).prop_map(move |lists| {
        lists
            .into_iter()
            .map(|entries| {
                let total: f64 = entries.iter().map(|e| e.1).sum();
                MassFunction::new(frame.clone(), entries.into_iter().map(|(s, v)| (FocalSet(s), v / total))).unwrap()
            })
            .collect()
    })
}

fn brute_force(m1: &MassFunction, m2: &MassFunction) -> Option<Vec<f64>> {
    let size = 1usize << m1.frame().len();
    let mut out = vec![0.0; size];
    for x in 0..size {
        for y in 0..size {
            out[x & y] += m1.mass(FocalSet(x as u16)) * m2.mass(FocalSet(y as u16));
        }
    }
    let k: f64 = out[1..].iter().sum();
    (k > 1e-12).then(|| {
        out[0] = 0.0;
        out.iter().map(|v| v / k).collect()
    })
}

proptest! {
    #[test]
    fn belief_never_exceeds_plausibility((frame, m) in frame_and_mass(6)) {
        for set in frame.powerset() {
            let iv = uncertainty_interval(&m, set).unwrap();
            prop_assert!(iv.bel <= iv.pl);
            prop_assert!(iv.mu >= 0.0);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&iv.pl));
        }
    }

    #[test]
    fn plausibility_is_dual_to_belief((frame, m) in frame_and_mass(6)) {
        for set in frame.powerset() {
            let dual = 1.0 - belief(&m, frame.complement(set)).unwrap();
            prop_assert!((plausibility(&m, set).unwrap() - dual).abs() <= 1e-12);
        }
    }

    #[test]
    fn dempster_matches_brute_force(
        (_frame, pair) in (1usize..=4).prop_flat_map(|p| {
            let frame = Frame::new((0..p).map(|i| format!("h{i}"))).unwrap();
            (Just(frame.clone()), masses_on(&frame, 2))
        })
    ) {
        match (dempster_combine(&pair), brute_force(&pair[0], &pair[1])) {
            (Ok(got), Some(want)) => {
                prop_assert!(validate_mass(&got).is_ok());
                for (s, w) in want.iter().enumerate() {
                    prop_assert!((got.mass(FocalSet(s as u16)) - w).abs() <= 1e-12);
                }
            }
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "disagreement: {got:?} vs {want:?}"),
        }
    }

    #[test]
    fn dempster_is_order_free_on_triples(
        (frame, triple) in (2usize..=4).prop_flat_map(|p| {
            let frame = Frame::new((0..p).map(|i| format!("h{i}"))).unwrap();
            (Just(frame.clone()), masses_on(&frame, 3))
        })
    ) {
        if let Ok(reference) = dempster_combine(&triple) {
            for order in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                let permuted: Vec<_> = order.iter().map(|&i| triple[i].clone()).collect();
                let other = dempster_combine(&permuted).unwrap();
                for set in frame.powerset() {
                    prop_assert!((reference.mass(set) - other.mass(set)).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn json_round_trip_keeps_masses((frame, m) in frame_and_mass(5)) {
        let text = serde_json::to_string(&m.to_json()).unwrap();
        let back = MassFunction::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        for set in frame.powerset() {
            prop_assert!((back.mass(set) - m.mass(set)).abs() <= 1e-15);
        }
    }

    #[test]
    fn pignistic_is_a_distribution((_frame, m) in frame_and_mass(6)) {
        let betp = pignistic(&m);
        prop_assert!(betp.iter().all(|p| *p >= 0.0));
        prop_assert!((betp.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
}
