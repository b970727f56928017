use std::path::Path;
use std::process::{Command, Output};

use chiral_eit::params::{Config, SPEED_OF_LIGHT};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chiral-eit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// Rows of one named section of a multi-table CSV document.
fn section(text: &str, name: &str) -> Vec<Vec<String>> {
    let header = format!("# {name}");
    let body: String = text
        .split("\n\n")
        .find(|b| b.starts_with(&header))
        .unwrap_or_else(|| panic!("missing section {name}"))
        .lines()
        .skip(1)
        .map(|l| format!("{l}\n"))
        .collect();
    csv_rows(&body)
}

fn column(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn spectrum_row_count_and_header() {
    let o = bin(&["spectrum", "--preset", "fig2a", "--grid", "-10:10:2001", "--mode", "cold"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2002);
    assert_eq!(
        rows[0].join(","),
        "scenario,mode,v_doppler,omega_3,delta_p,chi_e_re,chi_e_im,chi_m_re,chi_m_im,\
         xi_eh_re,xi_eh_im,xi_he_re,xi_he_im,n_r,n_i,n_g"
    );
    assert_eq!(rows[1][4], "-1.00000000000e1");
    assert_eq!(rows[2001][4], "1.00000000000e1");
}

#[test]
fn doppler_overlay_has_four_series() {
    let o = bin(&["spectrum", "--preset", "fig6", "--vd", "0,0.1,0.2,0.3", "--grid", "-1:1:21"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    let vd = column(&rows, "v_doppler");
    let mut series: Vec<&str> = rows[1..].iter().map(|r| r[vd].as_str()).collect();
    series.dedup();
    assert_eq!(series, ["0.00000000000e0", "1.00000000000e-1", "2.00000000000e-1", "3.00000000000e-1"]);
    assert_eq!(rows.len(), 1 + 4 * 21);
}

#[test]
fn invalid_input_exits_with_two() {
    for args in [
        vec!["spectrum", "--preset", "fig2a", "--grid", "1:2:0"],
        vec!["delay", "--preset", "nonexistent"],
        vec!["spectrum", "--mode", "lukewarm"],
        vec!["pulse", "--tau0", "-1"],
    ] {
        let o = bin(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn invalid_config_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut c = Config::default();
    c.system.gamma_1 = 0.0;
    c.system.alpha_2 = 0.5;
    c.medium.v_doppler = -1.0;
    std::fs::write(&path, c.to_json()).unwrap();
    let o = bin(&["delay", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for needle in ["NonPositiveDecay", "BadPropagationSign", "NegativeDopplerWidth"] {
        assert!(err.contains(needle), "{needle} missing from {err}");
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("extra.json");
    std::fs::write(&path, r#"{"system": {"omega_9": 1.0}}"#).unwrap();
    let o = bin(&["delay", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn delay_table_for_four_control_fields() {
    let o = bin(&["delay", "--preset", "fig7", "--omega3", "0.7,1.0,1.5,5.0", "--mode", "both", "--calibrated"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 9);
    let ng = column(&rows, "n_g");
    let row = |o3: &str, mode: &str| -> f64 {
        rows.iter()
            .find(|r| r[1] == mode && r[2] == o3)
            .map(|r| r[ng].parse().unwrap())
            .unwrap()
    };
    assert!((row("1.50000000000e0", "cold") + 2023.81).abs() < 1e-6 * 2023.81);
    assert!(row("5.00000000000e0", "hot") < 0.0);
}

#[test]
fn group_indices_nearly_equal_at_crossover_field() {
    let o = bin(&["delay", "--preset", "fig7", "--omega3", "3.6", "--mode", "both", "--calibrated"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let ng = column(&rows, "n_g");
    let cold: f64 = rows[1][ng].parse().unwrap();
    let hot: f64 = rows[2][ng].parse().unwrap();
    assert!((cold - hot).abs() < 0.05 * cold.abs(), "{cold} {hot}");
}

#[test]
fn crossover_command() {
    let o = bin(&["crossover", "--preset", "fig7", "--calibrated"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    let x: f64 = rows[1][3].parse().unwrap();
    assert!((x - 3.6).abs() <= 0.5, "{x}");
    let none = bin(&["crossover", "--preset", "fig7", "--range", "0.5:1"]);
    assert_eq!(none.status.code(), Some(3));
    assert!(stderr(&none).contains("NoCrossoverInRange"));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["spectrum", "--preset", "fig4a", "--grid", "-3:3:61", "--format", "json"];
    let a = bin(&args);
    let b = bin(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 122);
    assert_eq!(v[0]["scenario"], "fig4a");
}

#[test]
fn json_mirrors_csv() {
    let csv = stdout(&bin(&["delay", "--preset", "fig7c"]));
    let json = bin(&["delay", "--preset", "fig7c", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let rows = csv_rows(&csv);
    for (i, name) in rows[0].iter().enumerate() {
        assert!(v[0].get(name).is_some(), "{name}");
        if let Ok(x) = rows[1][i].parse::<f64>() {
            assert_eq!(v[0][name].as_f64(), Some(x));
        }
    }
}

#[test]
fn calibration_round_trip_through_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig7a.json");
    let o = bin(&[
        "calibrate", "--preset", "fig7a", "--mode", "cold", "--target", "1415.65", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = Config::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let rec = cfg.calibration.clone().unwrap();
    assert_eq!(rec.kappa_e, cfg.medium.density_coupling);
    assert_eq!(rec.quantity, "N_g");

    let o = bin(&["spectrum", "--config", path.to_str().unwrap(), "--grid", "0:0:1", "--mode", "cold"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    let ng: f64 = rows[1][column(&rows, "n_g")].parse().unwrap();
    assert!((ng - 1415.65).abs() < 1e-6 * 1415.65, "{ng}");
}

#[test]
fn impossible_calibration_fails_numerically() {
    let o = bin(&["calibrate", "--preset", "fig7a", "--mode", "cold", "--target", "1e12"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("NoRootInBracket"));
}

fn metrics(text: &str) -> Vec<(String, Vec<f64>, Vec<String>)> {
    let rows = section(text, "metrics");
    let header = rows[0].clone();
    rows[1..]
        .iter()
        .map(|r| (r[0].clone(), r[1..].iter().map(|x| x.parse().unwrap()).collect(), header[1..].to_vec()))
        .collect()
}

fn metric(m: &(String, Vec<f64>, Vec<String>), name: &str) -> f64 {
    m.1[m.2.iter().position(|c| c == name).unwrap()]
}

#[test]
fn vacuum_pulse_is_delayed_by_transit_time() {
    let o = bin(&["pulse", "--vacuum"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = metrics(&stdout(&o));
    assert_eq!(m.len(), 1);
    assert_eq!(m[0].0, "vacuum");
    let want = 0.06 / SPEED_OF_LIGHT * 1e9;
    assert!((metric(&m[0], "peak_shift_ns") - want).abs() < 1e-6 * want);
    assert!(metric(&m[0], "distortion") < 1e-9);
}

#[test]
fn pulse_sections_and_separation() {
    let o = bin(&["pulse", "--preset", "fig8ab", "--calibrated"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let time = section(&text, "time");
    assert_eq!(time[0], ["t_over_tau0", "input", "cold", "hot"]);
    let freq = section(&text, "frequency");
    assert_eq!(freq[0], ["w_over_dw", "input", "cold", "hot"]);
    let m = metrics(&text);
    let (cold, hot) = (&m[0], &m[1]);
    // Separation of the two peaks from their carrier group indices and dispersion.
    let l = 0.06;
    let delta = 2e9;
    let want = l * (metric(hot, "n0") - metric(cold, "n0")) / SPEED_OF_LIGHT
        + delta * l * (metric(hot, "g_vd") - metric(cold, "g_vd"));
    let got = (metric(hot, "peak_shift_ns") - metric(cold, "peak_shift_ns")) * 1e-9;
    assert!((got - want).abs() < 1e-3 * want.abs(), "{got} {want}");
    // The spectrum magnitude is untouched by a lossless first-order medium.
    let col = |name: &str| column(&freq, name);
    let peak = |c: usize| {
        freq[1..]
            .iter()
            .max_by(|a, b| a[c].parse::<f64>().unwrap().total_cmp(&b[c].parse::<f64>().unwrap()))
            .map(|r| r[0].clone())
            .unwrap()
    };
    assert_eq!(peak(col("input")), peak(col("cold")));
    assert_eq!(peak(col("input")), peak(col("hot")));
}

#[test]
fn superluminal_pulses_advance() {
    let o = bin(&["pulse", "--preset", "fig8cd", "--calibrated", "--delta", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for m in metrics(&stdout(&o)) {
        assert!(metric(&m, "peak_shift_ns") < 0.0, "{}", m.0);
    }
}

#[test]
fn preset_dump_matches_fixtures() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/presets");
    let list = stdout(&bin(&["preset-dump", "--list"]));
    let names: Vec<&str> = list.lines().collect();
    assert_eq!(names.len(), 34);
    for n in names {
        let o = bin(&["preset-dump", "--preset", n]);
        assert!(o.status.success());
        let fixture = std::fs::read_to_string(dir.join(format!("{n}.json"))).unwrap();
        assert_eq!(stdout(&o), fixture, "{n}");
    }
}
