use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use matmoment::io;

const BIN: &str = env!("CARGO_BIN_EXE_matmoment");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn scalar_problem(a: f64, b: f64, s: &[f64]) -> String {
    let moments: Vec<String> = s.iter().map(|v| format!("[[[{v},0]]]")).collect();
    format!(r#"{{"a":{a},"b":{b},"N":1,"moments":[{}]}}"#, moments.join(","))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn check_boundary_case_is_solvable() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.json", &scalar_problem(-1.0, 1.0, &[1.0, 0.0, 1.0]));
    let o = run(&["check", p(&f)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("Γ̃_1 min-eig"), "{text}");
    assert!(text.contains("determinate"), "{text}");
}

#[test]
fn check_unsolvable_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.json", &scalar_problem(-1.0, 1.0, &[1.0, 0.0, 3.0]));
    let o = run(&["check", p(&f)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("[FAIL] GammaTilde PSD"), "{}", stdout(&o));
}

#[test]
fn truncated_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.json", r#"{"a":-1,"b":1,"N":1,"moments":[[[[1,0]]"#);
    let o = run(&["check", p(&f)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1 column"));
}

#[test]
fn solve_two_point_measure() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.json", &scalar_problem(-1.0, 1.0, &[1.0, 0.0, 1.0]));
    let m = dir.path().join("m.json");
    let o = run(&["solve", p(&f), "--scalar-k", "0.5", "--out", p(&m)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let mu = io::read_measure(&m).unwrap();
    assert_eq!(mu.len(), 2);
    for (at, x) in mu.atoms().iter().zip([-1.0, 1.0]) {
        assert!((at.x - x).abs() < 1e-9);
        assert!((at.weight.get(0, 0).re - 0.5).abs() < 1e-9);
    }
    assert_eq!(run(&["verify", p(&m), p(&f)]).status.code(), Some(0));

    let bad = write(dir.path(), "bad.json", r#"{"a":-1,"b":1,"N":1,"atoms":[{"x":0.9,"W":[[[0.5,0]]]},{"x":-1,"W":[[[0.5,0]]]}]}"#);
    assert_eq!(run(&["verify", p(&bad), p(&f)]).status.code(), Some(2));
    let wide = write(dir.path(), "w.json", r#"{"a":-1,"b":1,"N":2,"atoms":[{"x":0,"W":[[[1,0],[0,0]],[[0,0],[1,0]]]}]}"#);
    assert_eq!(run(&["verify", p(&wide), p(&f)]).status.code(), Some(1));
}

#[test]
fn solve_even_case_with_t_zero() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.json", &scalar_problem(0.0, 1.0, &[1.0, 0.5]));
    let m = dir.path().join("m.json");
    let o = run(&["solve", p(&f), "--scalar-t", "0", "--out", p(&m)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let mu = io::read_measure(&m).unwrap();
    assert_eq!(mu.len(), 1);
    assert!((mu.atoms()[0].x - 0.5).abs() < 1e-9);
    assert!((mu.atoms()[0].weight.get(0, 0).re - 1.0).abs() < 1e-9);
}

#[test]
fn bad_parameter_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.json", &scalar_problem(-1.0, 1.0, &[1.0, 0.0, 1.0]));
    assert_eq!(run(&["solve", p(&f), "--scalar-k", "2"]).status.code(), Some(1));
    assert_eq!(run(&["solve", p(&f), "--bogus"]).status.code(), Some(1));
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (x, y) = (dir.path().join("x.json"), dir.path().join("y.json"));
    for out in [&x, &y] {
        let o = run(&["gen", "--seed", "7", "--N", "2", "--atoms", "3", "--a", "-2", "--b", "1", "--l", "4", "--out", p(out)]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&x).unwrap(), std::fs::read(&y).unwrap());
    assert_eq!(run(&["check", p(&x)]).status.code(), Some(0));
    assert_eq!(run(&["gen", "--atoms", "0", "--out", p(&x)]).status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("check"));
}
