use ifem::eigsolve::{EigenOptions, Method};
use ifem::study::{observed_order, run_convergence, run_convergence_with, StudyConfig};

fn small() -> StudyConfig {
    StudyConfig::parse(
        "domain = disk 1\n\
         interface = circle 0 0 0.38\n\
         beta = 1 1000\n\
         kappa = 1\n\
         levels = 2 3 4\n\
         k = 6\n\
         reference = oracle\n",
    )
    .unwrap()
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let cfg = small();
    let first = run_convergence(&cfg).unwrap().to_csv();
    let second = run_convergence(&cfg).unwrap().to_csv();
    assert_eq!(first, second);

    let parallel = StudyConfig {
        parallel_levels: true,
        ..cfg
    };
    assert_eq!(first, run_convergence(&parallel).unwrap().to_csv());
}

#[test]
fn orders_follow_from_errors() {
    let report = run_convergence(&small()).unwrap();
    assert!(report.orders[0].is_empty());
    for j in 1..report.levels.len() {
        let (a, b) = (&report.levels[j - 1], &report.levels[j]);
        for (i, &ord) in report.orders[j].iter().enumerate() {
            let again = observed_order(report.errors[j - 1][i], report.errors[j][i], a.h, b.h);
            assert_eq!(format!("{ord:.3}"), format!("{again:.3}"));
        }
    }
    for (lv, err) in report.levels.iter().zip(&report.errors) {
        for (i, &e) in err.iter().enumerate() {
            let exact = report.reference[i];
            assert!((e - (lv.eigenvalues[i] - exact).abs() / exact).abs() <= 1e-15 * e.max(1.0));
        }
    }
}

#[test]
fn csv_has_one_row_per_level() {
    let csv = run_convergence(&small()).unwrap().to_csv();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("level,h,dof,lambda_1,err_1,ord_1"));
    let width = rows[0].split(',').count();
    assert!(rows.iter().all(|r| r.split(',').count() == width));
}

#[test]
fn dense_and_shift_invert_paths_agree() {
    let mut cfg = small();
    cfg.levels = vec![3, 4];
    let run = |method| {
        let opts = EigenOptions {
            method,
            ..EigenOptions::default()
        };
        run_convergence_with(&cfg, &opts).unwrap()
    };
    let dense = run(Method::Dense);
    let krylov = run(Method::ShiftInvert);
    for (d, s) in dense.levels.iter().zip(&krylov.levels) {
        for (a, b) in d.eigenvalues.iter().zip(&s.eigenvalues) {
            assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} vs {b}");
        }
    }
}
