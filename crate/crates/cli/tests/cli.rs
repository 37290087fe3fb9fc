use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn consonant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_consonant"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn contour_then_plaus_and_region() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "y.csv", "y\n1\n10\n");
    let contour = dir.path().join("c.json");
    let o = consonant(&[
        "contour",
        "--data",
        &data,
        "--measure",
        "mean",
        "--grid",
        "0:20:21",
        "--format",
        "json",
        "--out",
        contour.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&contour).unwrap()).unwrap();
    assert_eq!(doc["metadata"]["measure"], "mean");

    let o = consonant(&[
        "plaus",
        "--contour",
        contour.to_str().unwrap(),
        "--assert",
        "all",
        "--assert",
        "[30,40]",
    ]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "assertion,lower,upper,error");
    assert!(lines[1].ends_with(",1,1,"), "{text}");
    assert!(lines[2].contains(",0,0,"), "{text}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("no grid point"));

    let o = consonant(&[
        "region",
        "--contour",
        contour.to_str().unwrap(),
        "--alpha",
        "0.5",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{o:?}");
    let region: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(region["threshold"], 0.5);
    assert!(region["retained"].as_u64().unwrap() > 0);
}

#[test]
fn contour_csv_round_trips_through_plaus() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "y.csv", "0.3\n-1.2\n2.0\n0.7\n1.1\n");
    let contour = dir.path().join("c.csv");
    let o = consonant(&[
        "contour",
        "--data",
        &data,
        "--out",
        contour.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(fs::read_to_string(&contour)
        .unwrap()
        .starts_with("x0,count,n,value"));
    let o = consonant(&[
        "plaus",
        "--contour",
        contour.to_str().unwrap(),
        "--assert",
        "(-inf,inf)",
        "--format",
        "json",
    ]);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows[0]["upper"], 1.0);
}

#[test]
fn npi_and_wilks() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "y.csv", "1\n2\n3\n4\n");
    let o = consonant(&["npi", "--data", &data, "--assert", "[2.5,2.5]"]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o).lines().nth(1).unwrap(), "\"[2.5,2.5]\",0,0.2");
    let o = consonant(&["wilks", "--data", &data, "--r", "1", "--s", "4"]);
    assert_eq!(stdout(&o).lines().nth(1).unwrap(), "1,4,1,4,0.6");
    let o = consonant(&["wilks", "--data", &data, "--r", "3", "--s", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn im_contour_lower_matches_contour() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "y.csv", "0\n1\n1\n3\n");
    let a = consonant(&["contour", "--data", &data, "--grid", "-2:5:15"]);
    let b = consonant(&["im-contour", "--data", &data, "--grid", "-2:5:15"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let r = consonant(&[
        "im-contour",
        "--data",
        &data,
        "--grid",
        "-2:5:15",
        "--kind",
        "randomized",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert_eq!(doc[0]["metadata"]["seed"], "20190101");
}

#[test]
fn band_rows_are_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let text: String = (0..30)
        .map(|i| {
            format!(
                "{},{}\n",
                i as f64 / 29.0,
                2.0 * i as f64 / 29.0 + 0.1 * ((i * 7 % 5) as f64 - 2.0)
            )
        })
        .collect();
    let data = write(dir.path(), "xy.csv", &text);
    let o = consonant(&[
        "band",
        "--data",
        &data,
        "--regressor",
        "linear",
        "--alpha",
        "0.2",
        "--xgrid",
        "auto:5:0",
    ]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    let rows: Vec<Vec<f64>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert!(r[1] <= r[3] && r[3] <= r[2], "{r:?}");
    }
}

#[test]
fn exit_code_tracks_bounds() {
    let ok = consonant(&[
        "validate-weak",
        "--dist",
        "cauchy",
        "--n",
        "10",
        "--reps",
        "300",
        "--alpha",
        "0.1",
    ]);
    assert_eq!(ok.status.code(), Some(0), "{ok:?}");
    let text = stdout(&ok);
    assert!(text.starts_with("experiment,predictor,"), "{text}");

    let bad = consonant(&[
        "validate-strong",
        "--predictor",
        "normal:0,0.1",
        "--reps",
        "300",
        "--alpha",
        "0.05",
        "--assert",
        "(-inf,-1)|(1,inf)",
    ]);
    assert_eq!(bad.status.code(), Some(1), "{bad:?}");
    assert!(String::from_utf8_lossy(&bad.stderr).contains("bound failed"));

    let exact = consonant(&["validate-exact", "--n", "3"]);
    assert_eq!(exact.status.code(), Some(0), "{exact:?}");
    let zero = consonant(&["validate-exact", "--predictor", "zero"]);
    assert_eq!(zero.status.code(), Some(1), "{zero:?}");
    assert!(stdout(&zero).lines().count() > 1);

    let dp = consonant(&["baseline", "dp", "--reps", "1000"]);
    assert_eq!(dp.status.code(), Some(1), "{dp:?}");
}

#[test]
fn strong_alt_and_ks() {
    let ball = consonant(&[
        "validate-strong-alt",
        "--reps",
        "300",
        "--map",
        "ray",
        "--format",
        "json",
    ]);
    assert_eq!(ball.status.code(), Some(0), "{ball:?}");
    let report: serde_json::Value = serde_json::from_str(&stdout(&ball)).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
    let ks = consonant(&["ks", "--n", "5", "--reps", "2000"]);
    assert_eq!(ks.status.code(), Some(0), "{ks:?}");
    let raw = consonant(&["ks", "--n", "5", "--reps", "2000", "--raw"]);
    assert_eq!(raw.status.code(), Some(1), "{raw:?}");
    let few = consonant(&["ks", "--reps", "10"]);
    assert_eq!(few.status.code(), Some(2));
}

#[test]
fn seeded_runs_are_reproducible_across_jobs() {
    let args = [
        "validate-weak",
        "--dist",
        "skewnormal",
        "--reps",
        "400",
        "--seed",
        "5",
    ];
    let a = consonant(&[&args[..], &["--jobs", "1"]].concat());
    let b = consonant(&[&args[..], &["--jobs", "3"]].concat());
    assert_eq!(stdout(&a), stdout(&b));
    let c = consonant(&[
        "validate-weak",
        "--dist",
        "skewnormal",
        "--reps",
        "400",
        "--seed",
        "6",
    ]);
    assert_ne!(stdout(&a), stdout(&c));
}

#[test]
fn tables_and_figures() {
    let dir = tempfile::tempdir().unwrap();
    let t1 = consonant(&["table1", "--reps", "50"]);
    assert!(t1.status.success());
    assert_eq!(stdout(&t1).lines().next().unwrap(), "n,normal,cauchy,skew");
    assert_eq!(stdout(&t1).lines().count(), 4);

    let fig = dir.path().join("hist.csv");
    let o = consonant(&[
        "figure-data",
        "hist",
        "--n",
        "30",
        "--out",
        fig.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(fs::read_to_string(&fig)
        .unwrap()
        .starts_with("y,median,twosided"));
    let data = fs::read_to_string(dir.path().join("hist-data.csv")).unwrap();
    assert_eq!(data.lines().count(), 31);

    let o = consonant(&["figure-data", "contour", "--n", "30", "--format", "json"]);
    let tables: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(
        tables[0]["columns"],
        serde_json::json!(["x", "y", "pi", "in_region"])
    );
}

#[test]
fn bad_input_is_an_error() {
    assert_eq!(
        consonant(&["contour", "--data", "/nonexistent.csv"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        consonant(&["validate-weak", "--dist", "gamma"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        consonant(&["plaus", "--data", "x.csv"]).status.code(),
        Some(2)
    );
}
