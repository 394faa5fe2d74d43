use std::path::Path;

use kahler_flow::lab::sweep::run_sweep;

const SWEEP: &str = r#"
schema_version = 1
[geometry]
n_nodes = 20
[initial]
modes = [{ degree = 1, amplitude = 0.05 }, { degree = 2, amplitude = 0.08 }]
[flow]
t_max = 0.6
[output]
sample_every = 0.2

[[sweep.axes]]
path = "initial.modes.1.amplitude"
values = [0.02, 0.06, 0.1]

[[sweep.axes]]
path = "flow.scheme"
values = ["imex", "explicit_rk4"]
"#;

fn read_cells(dir: &Path, n: usize) -> Vec<Vec<u8>> {
    (0..n).map(|i| std::fs::read(dir.join(format!("cell_{i:04}")).join("diagnostics.jsonl")).unwrap()).collect()
}

#[test]
fn sweep_cells_do_not_depend_on_parallelism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let serial = run_sweep(SWEEP, Path::new("."), a.path(), Some(1)).unwrap();
    let parallel = run_sweep(SWEEP, Path::new("."), b.path(), Some(4)).unwrap();
    assert_eq!(serial.len(), 6);
    assert!(serial.iter().all(|c| c.ok));
    assert_eq!(read_cells(a.path(), 6), read_cells(b.path(), 6));
    assert_eq!(
        std::fs::read(a.path().join("index.jsonl")).unwrap(),
        std::fs::read(b.path().join("index.jsonl")).unwrap()
    );
    assert_eq!(parallel.iter().map(|c| c.cell).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
}

#[test]
fn failing_cells_are_recorded() {
    let text = SWEEP.replace("values = [0.02, 0.06, 0.1]", "values = [0.02, 0.7]");
    let dir = tempfile::tempdir().unwrap();
    let cells = run_sweep(&text, Path::new("."), dir.path(), Some(2)).unwrap();
    assert_eq!(cells.len(), 4);
    assert!(cells[0].ok);
    assert!(!cells[2].ok);
    assert_eq!(cells[2].exit_code, Some(2));
}
