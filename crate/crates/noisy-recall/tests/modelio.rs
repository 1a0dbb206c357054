use noisy_recall::core::{Cluster, NetworkModel};
use noisy_recall::modelio::{from_text, model_hash, read_model, to_text, write_model};
use proptest::prelude::*;

fn model_strategy() -> impl Strategy<Value = NetworkModel> {
    (2usize..30, 1usize..5, 2u32..20, 1u32..4).prop_flat_map(|(n, l, q, s)| {
        let clusters = prop::collection::vec(
            (
                prop::collection::btree_set(0..n, 1..=n),
                1usize..5,
                prop::collection::vec((any::<bool>(), 0.0f64..3.0), 5 * 30),
            ),
            l,
        );
        (Just(n), Just(q), Just(s), clusters)
    })
    .prop_map(|(n, q, s, raw)| {
        let mut covered = vec![false; n];
        let mut members_all: Vec<Vec<usize>> = raw.iter().map(|(m, _, _)| m.iter().copied().collect()).collect();
        for m in &members_all {
            for &j in m {
                covered[j] = true;
            }
        }
        for j in (0..n).filter(|&j| !covered[j]) {
            members_all[0].push(j);
        }
        let clusters: Vec<Cluster> = raw
            .iter()
            .zip(members_all)
            .enumerate()
            .map(|(i, ((_, m, w), members))| {
                let weights: Vec<f64> = (0..m * members.len())
                    .map(|k| {
                        let (neg, mag) = w[k % w.len()];
                        let v = 0.5 + mag;
                        if neg { -v } else { v }
                    })
                    .collect();
                Cluster::new(i, members, *m, weights).unwrap()
            })
            .collect();
        let eta = clusters.iter().map(|c| c.min_abs_weight()).fold(f64::INFINITY, f64::min);
        NetworkModel::new(n, q, s, eta, clusters).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_round_trip_is_exact(model in model_strategy()) {
        let text = to_text(&model);
        let back = from_text(&text).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(to_text(&back), text);
        prop_assert_eq!(model_hash(&back), model_hash(&model));
    }
}

#[test]
fn file_round_trip_returns_the_content_hash() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    let c = Cluster::new(0, vec![0, 1, 2], 1, vec![0.5, -1.0, 0.5]).unwrap();
    let model = NetworkModel::new(3, 8, 1, 0.5, vec![c]).unwrap();
    let hash = write_model(&model, &path).unwrap();
    assert_eq!(hash, model_hash(&model));
    assert_eq!(hash.len(), 64);
    assert_eq!(read_model(&path).unwrap(), model);
}

#[test]
fn malformed_files_are_rejected() {
    assert!(from_text("").is_err());
    assert!(from_text("3 1 8 1 0.5\n1 3\n0 1 x\n0.5 -1 0.5\n").is_err());
    // weight below the recorded minimum magnitude
    assert!(from_text("3 1 8 1 0.5\n1 3\n0 1 2\n0.25 -1 0.5\n").is_err());
    // neuron 2 is not covered
    assert!(from_text("3 1 8 1 0.5\n1 2\n0 1\n0.5 -0.5\n").is_err());
}
