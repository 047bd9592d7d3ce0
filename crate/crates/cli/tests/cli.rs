//! End-to-end tests of the `randset` binary: exit codes, output files,
//! determinism across reruns and thread counts, and seed precedence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_randset"));
    c.env_remove("RANDSET_SEED");
    c
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary should run")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn assert_ok(out: &Output) {
    assert_eq!(code(out), 0, "stderr: {}", stderr(out));
}

/// Simulates three Boolean realisations into `dir` and returns their paths.
fn fixtures(dir: &Path, seed: u64) -> Vec<PathBuf> {
    let out = run(bin()
        .args(["simulate", "boolean", "--n", "3"])
        .arg("--seed")
        .arg(seed.to_string())
        .arg("--out")
        .arg(dir));
    assert_ok(&out);
    (0..3).map(|i| dir.join(format!("real_{i:03}.pbm"))).collect()
}

const TINY_PBM: &str = "P1\n6 6\n000000\n000000\n001100\n001100\n000000\n000000\n";

#[test]
fn simulate_is_deterministic_and_echoes_config() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(bin()
            .args(["simulate", "boolean", "--n", "2", "--seed", "11"])
            .arg("--out")
            .arg(dir));
        assert_ok(&out);
    }
    assert_eq!(
        fs::read(a.join("real_001.pbm")).unwrap(),
        fs::read(b.join("real_001.pbm")).unwrap()
    );

    let echo = read(&a.join("effective-config.txt"));
    assert!(echo.starts_with("command = simulate\n"), "echo: {echo}");
    assert!(echo.contains("\nseed = 11\n"));
    assert!(echo.contains("\nwindow = 400x400\n"));
    assert!(echo.contains("\nn = 2\n"));

    let meta = read(&a.join("real_000.txt"));
    assert!(meta.contains("model = boolean\n"));
    assert!(meta.contains("window = 400x400\n"));
}

#[test]
fn simulate_zero_realisations_writes_no_images() {
    let tmp = TempDir::new().unwrap();
    let out = run(bin()
        .args(["simulate", "boolean", "--n", "0"])
        .arg("--out")
        .arg(tmp.path()));
    assert_ok(&out);
    let images = fs::read_dir(tmp.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "pbm"))
        .count();
    assert_eq!(images, 0);
    assert!(tmp.path().join("effective-config.txt").exists());
}

#[test]
fn squares_without_ratio_law_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = run(bin()
        .args(["simulate", "squares"])
        .arg("--out")
        .arg(tmp.path()));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("ratio-law"), "stderr: {}", stderr(&out));
}

#[test]
fn unknown_model_is_a_usage_error() {
    let out = run(bin().args(["simulate", "voronoi"]));
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_config_key_is_rejected_with_location() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.conf");
    fs::write(&cfg, "# run settings\nradiuss = 3\n").unwrap();
    let out = run(bin()
        .args(["simulate", "boolean"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path()));
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("radiuss") && err.contains(":2"), "stderr: {err}");
}

#[test]
fn describe_writes_one_deterministic_csv_per_image() {
    let tmp = TempDir::new().unwrap();
    let images = fixtures(&tmp.path().join("sims"), 31);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(bin()
            .arg("describe")
            .args(&images[..2])
            .args(["--radius", "3", "--bins", "8"])
            .arg("--out")
            .arg(dir));
        assert_ok(&out);
    }
    let csv = read(&a.join("real_000_descriptors.csv"));
    assert!(csv.starts_with("component_id,ratio,t_1,"));
    assert!(csv.lines().next().unwrap().ends_with(",t_8,n_boundary"));
    assert!(csv.lines().count() > 1, "expected at least one component");
    assert!(a.join("real_001_descriptors.csv").exists());
    assert_eq!(csv, read(&b.join("real_000_descriptors.csv")));

    let echo = read(&a.join("effective-config.txt"));
    assert!(echo.contains("\nradius = 3\n"));
    assert!(echo.contains("\nbins = 8\n"));
}

#[test]
fn describe_empty_image_warns_and_writes_header_only_csv() {
    let tmp = TempDir::new().unwrap();
    let blank = tmp.path().join("blank.pbm");
    fs::write(&blank, format!("P1\n8 8\n{}", "00000000\n".repeat(8))).unwrap();
    let out = run(bin().arg("describe").arg(&blank).arg("--out").arg(tmp.path()));
    assert_ok(&out);
    assert!(stderr(&out).contains("no components"), "stderr: {}", stderr(&out));
    let csv = read(&tmp.path().join("blank_descriptors.csv"));
    assert_eq!(csv.lines().count(), 1, "csv: {csv}");
}

#[test]
fn describe_missing_file_exits_3_naming_it() {
    let tmp = TempDir::new().unwrap();
    let out = run(bin()
        .arg("describe")
        .arg(tmp.path().join("absent.pbm"))
        .arg("--out")
        .arg(tmp.path()));
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("absent.pbm"));
}

#[test]
fn test_reports_outcome_and_reruns_identically() {
    let tmp = TempDir::new().unwrap();
    let images = fixtures(&tmp.path().join("sims"), 47);
    let run_once = |dir: &Path| {
        let out = run(bin()
            .arg("test")
            .arg("--side-a")
            .args(&images[..2])
            .arg("--side-b")
            .arg(&images[2])
            .args(["--k", "8", "--permutations", "199", "--seed", "12"])
            .arg("--out")
            .arg(dir));
        assert_ok(&out);
        (stdout(&out), read(&dir.join("outcome.csv")))
    };
    let (text1, csv1) = run_once(&tmp.path().join("a"));
    let (text2, csv2) = run_once(&tmp.path().join("b"));
    assert_eq!(text1, text2);
    assert_eq!(csv1, csv2);

    let p_joint: f64 = text1
        .lines()
        .find_map(|l| l.strip_prefix("p_joint = "))
        .expect("p_joint line")
        .parse()
        .unwrap();
    assert!(p_joint > 0.0 && p_joint <= 1.0);
    assert!(csv1.starts_with("n_ratio_obs,n_curve_obs,p_ratio,p_curve,p_joint,s_used\n"));
}

#[test]
fn self_comparison_yields_large_pvalues_on_average() {
    let tmp = TempDir::new().unwrap();
    let images = fixtures(&tmp.path().join("sims"), 42);
    let mut total = 0.0;
    for seed in 1..=6u64 {
        let out = run(bin()
            .arg("test")
            .arg("--side-a")
            .arg(&images[0])
            .arg("--side-b")
            .arg(&images[0])
            .args(["--k", "10", "--permutations", "199"])
            .arg("--seed")
            .arg(seed.to_string())
            .arg("--out")
            .arg(tmp.path().join(format!("s{seed}"))));
        assert_ok(&out);
        total += stdout(&out)
            .lines()
            .find_map(|l| l.strip_prefix("p_joint = "))
            .unwrap()
            .parse::<f64>()
            .unwrap();
    }
    // Independent k-samples of the same image: no real difference to find.
    assert!(total / 6.0 > 0.2, "mean p_joint {}", total / 6.0);
}

#[test]
fn unwritable_out_dir_exits_3() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("plain.txt");
    fs::write(&file, "not a directory\n").unwrap();
    let out = run(bin()
        .args(["simulate", "boolean", "--n", "0"])
        .arg("--out")
        .arg(file.join("sub")));
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
}

#[test]
fn test_with_too_few_components_exits_4() {
    let tmp = TempDir::new().unwrap();
    let tiny = tmp.path().join("tiny.pbm");
    fs::write(&tiny, TINY_PBM).unwrap();
    let out = run(bin()
        .arg("test")
        .arg("--side-a")
        .arg(&tiny)
        .arg("--side-b")
        .arg(&tiny)
        .arg("--out")
        .arg(tmp.path()));
    assert_eq!(code(&out), 4, "stderr: {}", stderr(&out));
}

#[test]
fn experiment_rows_match_pairs_and_thread_count_changes_nothing() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "experiment",
        "--model-a",
        "boolean",
        "--model-b",
        "reduced-boolean",
        "--pairs",
        "5",
        "--k",
        "6",
        "--permutations",
        "99",
        "--seed",
        "123",
    ];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = run(bin().args(args).arg("--out").arg(&a));
    assert_ok(&out);
    let out = run(bin()
        .args(args)
        .arg("--out")
        .arg(&b)
        .env("RAYON_NUM_THREADS", "1"));
    assert_ok(&out);

    let csv = read(&a.join("pvalues.csv"));
    assert_eq!(csv, read(&b.join("pvalues.csv")));
    assert_eq!(csv.lines().next().unwrap(), "p_joint,p_ratio,p_curve");
    assert_eq!(csv.lines().count(), 6, "header plus one row per pair");
}

#[test]
fn experiment_derives_and_saves_the_square_ratio_law() {
    let tmp = TempDir::new().unwrap();
    let out = run(bin()
        .args([
            "experiment",
            "--model-a",
            "boolean",
            "--model-b",
            "squares",
            "--pairs",
            "3",
            "--k",
            "6",
            "--law-realisations",
            "3",
            "--permutations",
            "99",
            "--seed",
            "5",
        ])
        .arg("--out")
        .arg(tmp.path()));
    assert_ok(&out);
    let law = read(&tmp.path().join("ratio_law.txt"));
    let values: Vec<f64> = law.lines().map(|l| l.parse().unwrap()).collect();
    assert!(values.len() > 10);
    assert!(values.iter().all(|v| *v > 0.0));
    assert_eq!(read(&tmp.path().join("pvalues.csv")).lines().count(), 4);
}

#[test]
fn matrix_is_upper_triangular_with_bounded_counts() {
    let tmp = TempDir::new().unwrap();
    let sims = tmp.path().join("sims");
    fixtures(&sims, 63);
    let out = run(bin()
        .arg("matrix")
        .arg("--dir")
        .arg(&sims)
        .args(["--k", "5", "--repeats", "4", "--seed", "8"])
        .arg("--out")
        .arg(tmp.path()));
    assert_ok(&out);

    let mean = read(&tmp.path().join("mean_p.csv"));
    let rows: Vec<&str> = mean.lines().collect();
    assert_eq!(rows[0], "image,real_000,real_001,real_002");
    assert!(rows[1].starts_with("real_000,"));
    assert!(rows[2].starts_with("real_001,,"), "sub-diagonal cell empty: {}", rows[2]);
    assert!(rows[3].starts_with("real_002,,,"));

    let counts = read(&tmp.path().join("count_below_05.csv"));
    for cell in counts.lines().skip(1).flat_map(|r| r.split(',').skip(1)) {
        if !cell.is_empty() {
            assert!(cell.parse::<usize>().unwrap() <= 4);
        }
    }
}

#[test]
fn matrix_of_two_images_has_three_cells() {
    let tmp = TempDir::new().unwrap();
    let sims = tmp.path().join("sims");
    let images = fixtures(&sims, 17);
    let two = tmp.path().join("two");
    fs::create_dir(&two).unwrap();
    for img in &images[..2] {
        fs::copy(img, two.join(img.file_name().unwrap())).unwrap();
    }
    let out = run(bin()
        .arg("matrix")
        .arg("--dir")
        .arg(&two)
        .args(["--k", "5", "--repeats", "3", "--seed", "2"])
        .arg("--out")
        .arg(tmp.path()));
    assert_ok(&out);
    let filled = read(&tmp.path().join("mean_p.csv"))
        .lines()
        .skip(1)
        .flat_map(|r| r.split(',').skip(1).map(str::to_owned).collect::<Vec<_>>())
        .filter(|c| !c.is_empty())
        .count();
    assert_eq!(filled, 3, "two self pairs plus one cross pair");
}

#[test]
fn seed_precedence_is_flag_config_env_default() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.conf");
    fs::write(&cfg, "seed = 5\n").unwrap();
    let seed_line = |dir: &Path| {
        read(&dir.join("effective-config.txt"))
            .lines()
            .find(|l| l.starts_with("seed = "))
            .unwrap()
            .to_string()
    };

    let d = tmp.path().join("flag");
    let out = run(bin()
        .args(["simulate", "boolean", "--n", "0", "--seed", "9"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&d)
        .env("RANDSET_SEED", "7"));
    assert_ok(&out);
    assert_eq!(seed_line(&d), "seed = 9");

    let d = tmp.path().join("config");
    let out = run(bin()
        .args(["simulate", "boolean", "--n", "0"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&d)
        .env("RANDSET_SEED", "7"));
    assert_ok(&out);
    assert_eq!(seed_line(&d), "seed = 5");

    let d = tmp.path().join("env");
    let out = run(bin()
        .args(["simulate", "boolean", "--n", "0"])
        .arg("--out")
        .arg(&d)
        .env("RANDSET_SEED", "7"));
    assert_ok(&out);
    assert_eq!(seed_line(&d), "seed = 7");

    let d = tmp.path().join("default");
    let out = run(bin()
        .args(["simulate", "boolean", "--n", "0"])
        .arg("--out")
        .arg(&d));
    assert_ok(&out);
    assert_eq!(seed_line(&d), "seed = 0");
}

#[test]
fn hist_renders_svg_and_rejects_unknown_columns() {
    let tmp = TempDir::new().unwrap();
    let csv = tmp.path().join("pvalues.csv");
    fs::write(&csv, "p_joint,p_ratio,p_curve\n0.02,0.5,0.01\n0.4,0.6,0.2\n1,1,1\n").unwrap();

    let out = run(bin()
        .arg("hist")
        .arg("--input")
        .arg(&csv)
        .args(["--bins", "10"])
        .arg("--out")
        .arg(tmp.path()));
    assert_ok(&out);
    let svg = read(&tmp.path().join("hist.svg"));
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("p_joint (3 values)"));

    let out = run(bin()
        .arg("hist")
        .arg("--input")
        .arg(&csv)
        .args(["--column", "p_left"])
        .arg("--out")
        .arg(tmp.path()));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("p_left"));
}
