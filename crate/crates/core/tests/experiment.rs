use dstr::experiment::{read_csv, run_experiment, ExperimentSpec, Stats};

fn spec(grid: &str, reps: u32) -> ExperimentSpec {
    ExperimentSpec::from_json(&format!(
        r#"{{"scenario":{{"formation":{{"kind":"single_hop","count":2}},"protocol":{{"dss":3}}}},
            "grid":{grid},"replications":{reps},"base_seed":7}}"#
    ))
    .unwrap()
}

const SENSITIVITY: &str = r#"{"u":[2,3],"tsr":[0.75,0.95],"ct":[3,7],"gm":[3,9],"st":[5,10]}"#;

#[test]
fn two_level_grid_gives_one_row_per_run_in_order() {
    let out = run_experiment(&spec(SENSITIVITY, 2), 1).unwrap();
    assert_eq!(out.rows.len(), 32 * 2);
    assert_eq!(out.summary.len(), 32);
    for (i, row) in out.rows.iter().enumerate() {
        assert_eq!(row.run_id, i as u64);
        assert!(row.valid);
    }
    // Formation varies slowest, the last axis fastest.
    assert_eq!((out.rows[0].u, out.rows[0].st), (2, 5));
    assert_eq!((out.rows[2].u, out.rows[2].st), (2, 10));
    assert_eq!(out.rows[63].u, 3);
}

#[test]
fn replay_is_byte_identical_whatever_the_thread_count() {
    let s = spec(SENSITIVITY, 2);
    let mut a = Vec::new();
    let mut b = Vec::new();
    run_experiment(&s, 1).unwrap().write_csv(&mut a).unwrap();
    run_experiment(&s, 4).unwrap().write_csv(&mut b).unwrap();
    assert_eq!(a, b);
    let rows = read_csv(a.as_slice()).unwrap();
    assert_eq!(rows, run_experiment(&s, 2).unwrap().rows);
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn summary_matches_statistics_recomputed_from_rows() {
    let out = run_experiment(&spec(r#"{"u":[3,4],"ct":[3,7]}"#, 9), 1).unwrap();
    for cell in &out.summary {
        let rows = &out.rows[cell.cell * 9..cell.cell * 9 + 9];
        let values = sorted(rows.iter().map(|r| r.convergence_rounds.unwrap()).collect());
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // Nine samples: quartile ranks 2, 4 and 6 fall on order statistics.
        let want = [mean, var.sqrt(), var, values[0], values[8], values[2], values[4], values[6]];
        let s = &cell.metrics["convergence_rounds"];
        let got = [s.mean, s.std, s.var, s.min, s.max, s.q25, s.q50, s.q75].map(Option::unwrap);
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= 1e-9 * w.abs().max(1e-300), "{g} vs {w}");
        }
        assert_eq!(s.n, 9);
        assert_eq!(cell.converged, 9);
    }
}

#[test]
fn quartiles_between_order_statistics() {
    // Ranks 0.75, 1.5 and 2.25 over [10, 20, 30, 40].
    let s = Stats::of(&[40.0, 10.0, 30.0, 20.0]);
    assert_eq!((s.q25, s.q50, s.q75), (Some(17.5), Some(25.0), Some(32.5)));
}

#[test]
fn rings_axis_and_invalid_cells() {
    let s = spec(r#"{"rings":[0,1]}"#, 1);
    let cells = s.cells().unwrap();
    assert_eq!(cells.iter().map(|c| c.u).collect::<Vec<_>>(), vec![1, 7]);
    // 5 is not a hexagonal ring count.
    let mut bad = spec(r#"{"u":[5]}"#, 1);
    bad.scenario.formation = dstr::topology::FormationSpec::HexRings { rings: 1, spacing: 10.0 };
    assert!(run_experiment(&bad, 1).is_err());
    let mut bad = spec(r#"{"tsr":[1.5]}"#, 1);
    bad.replications = 1;
    assert!(run_experiment(&bad, 1).is_err());
}
