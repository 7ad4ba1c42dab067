use fraclab::geometry::{
    folded_dirichlet_energy, random_field, weighted_l2_inner, FractionalParams, HemisphereGrid,
    ScalarField,
};
use fraclab::rearrange::{
    arrangement_order, foliated_schwarz, polarization_sequence, polarize, trace_csv,
    HalfSpaceThroughAxis,
};
use proptest::prelude::*;

fn grid(s: f64) -> HemisphereGrid {
    HemisphereGrid::new(12, 24, FractionalParams::planar(s).unwrap()).unwrap()
}

#[test]
fn four_node_level_sequence() {
    let g = HemisphereGrid::new(8, 8, FractionalParams::planar(0.5).unwrap()).unwrap();
    let pattern = [3.0, 1.0, 2.0, 0.0, 5.0, 4.0, 0.5, 1.5];
    let v: Vec<f64> = (0..g.len()).map(|p| pattern[p % 8]).collect();
    let f = ScalarField::new(g.grid_ref(), v).unwrap();
    let target = foliated_schwarz(&f, &g).unwrap();
    // largest value at the centre, then outward with ties toward smaller φ
    let order = arrangement_order(8);
    assert_eq!(order[0], 2);
    let mut sorted = pattern.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for (rank, &col) in order.iter().enumerate() {
        assert_eq!(target.values()[col], sorted[rank]);
    }
    let run = polarization_sequence(&f, &g, 100, 1e-12).unwrap();
    assert!(run.converged);
    assert_eq!(run.field, target);
    let csv = trace_csv(&run.trace);
    assert_eq!(csv.lines().count(), run.trace.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn folded_polya_szego(seed in 0u64..100_000, s in prop::sample::select(vec![0.25, 0.5, 0.75])) {
        let g = grid(s);
        let f = random_field(&g, seed);
        let fs = foliated_schwarz(&f, &g).unwrap();
        for k in [1, 2, 4] {
            let before = folded_dirichlet_energy(&f, &g, k).unwrap();
            let after = folded_dirichlet_energy(&fs, &g, k).unwrap();
            prop_assert!(after <= before * (1.0 + 1e-12));
        }
        let (a, b) = (weighted_l2_inner(&f, &f, &g).unwrap(), weighted_l2_inner(&fs, &fs, &g).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn polarization_properties(seed in 0u64..100_000, plane in 0usize..24) {
        let g = grid(0.5);
        let f = random_field(&g, seed);
        let h = random_field(&g, seed ^ 0xdead_beef);
        let hs = HalfSpaceThroughAxis::family(&g)[plane];
        let fh = polarize(&f, &hs, &g).unwrap();
        let hh = polarize(&h, &hs, &g).unwrap();
        let dist = |a: &ScalarField, b: &ScalarField| {
            let d = ScalarField::new(a.grid_ref(), a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect()).unwrap();
            weighted_l2_inner(&d, &d, &g).unwrap()
        };
        prop_assert!(dist(&fh, &hh) <= dist(&f, &h) * (1.0 + 1e-12));
        prop_assert_eq!(polarize(&fh, &hs, &g).unwrap(), fh.clone());
        let fs = foliated_schwarz(&f, &g).unwrap();
        prop_assert_eq!(foliated_schwarz(&fh, &g).unwrap(), fs.clone());
        prop_assert_eq!(polarize(&fs, &hs, &g).unwrap(), fs.clone());
        prop_assert!(dist(&fh, &fs) <= dist(&f, &fs) * (1.0 + 1e-12));
        prop_assert!(folded_dirichlet_energy(&fh, &g, 1).unwrap() <= folded_dirichlet_energy(&f, &g, 1).unwrap() * (1.0 + 1e-12));
    }
}
