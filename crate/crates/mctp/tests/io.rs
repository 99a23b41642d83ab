use mctp::io::{self, IoError, Schema};
use mctp_core::contrasts::dunnett;
use mctp_core::BootstrapDraws;

const SAMPLE: &str = "\
id,group,y1,y2,age
1,b,1.5,2.0,30
2,a,0.5,1.0,41
3,b,2.5,3.0,35
4,a,1.0,NA,28
";

fn sample_ok() -> String {
    SAMPLE.replace("NA", "1.25")
}

#[test]
fn reads_and_regroups_rows() {
    let schema = Schema::new("group", &["y1", "y2"], &["age"]);
    let ds = io::read_dataset(sample_ok().as_bytes(), &schema).unwrap();
    assert_eq!(ds.groups(), ["b", "a"]);
    assert_eq!(ds.sizes(), [2, 2]);
    assert_eq!(ds.outcome_names(), ["y1", "y2"]);
    assert_eq!(ds.covariate_names(), ["age"]);
    assert_eq!(ds.y()[(1, 0)], 2.5);
    assert_eq!(ds.z()[(3, 0)], 28.0);
    assert_eq!(ds.y()[(3, 1)], 1.25);
}

#[test]
fn explicit_group_order() {
    let schema = Schema::new("group", &["y1"], &[]).with_group_order(&["a", "b"]);
    let ds = io::read_dataset(sample_ok().as_bytes(), &schema).unwrap();
    assert_eq!(ds.groups(), ["a", "b"]);
    assert_eq!(ds.y()[(0, 0)], 0.5);

    let schema = Schema::new("group", &["y1"], &[]).with_group_order(&["a", "b", "c"]);
    let err = io::read_dataset(sample_ok().as_bytes(), &schema).unwrap_err();
    assert!(matches!(err, IoError::EmptyGroup(ref g) if g == "c"), "{err}");
}

#[test]
fn missing_value_names_line_and_column() {
    let schema = Schema::new("group", &["y1", "y2"], &[]);
    let err = io::read_dataset(SAMPLE.as_bytes(), &schema).unwrap_err();
    assert!(err.is_data_error());
    let msg = err.to_string();
    assert!(msg.contains("y2") && msg.contains("missing value") && msg.contains('5'), "{msg}");
}

#[test]
fn missing_column_and_bad_cells() {
    let schema = Schema::new("group", &["y9"], &[]);
    assert!(matches!(io::read_dataset(SAMPLE.as_bytes(), &schema), Err(IoError::MissingColumn(c)) if c == "y9"));

    let bad = sample_ok().replace("2.5", "abc");
    let schema = Schema::new("group", &["y1"], &[]);
    let err = io::read_dataset(bad.as_bytes(), &schema).unwrap_err();
    assert!(err.to_string().contains("abc"));

    let short = format!("{}5,a,1\n", sample_ok());
    assert!(matches!(io::read_dataset(short.as_bytes(), &schema), Err(IoError::RowLength { .. })));
}

#[test]
fn missing_file_is_not_a_data_error() {
    let err = io::load_csv(std::path::Path::new("/definitely/not/here.csv"), &Schema::new("g", &["y"], &[]))
        .unwrap_err();
    assert!(!err.is_data_error());
}

#[test]
fn contrast_file_with_labels_and_header() {
    let text = "label,a1,a2,b1,b2\nfirst,-1,0,1,0\nsecond,0,-1,0,1\n";
    let h = io::read_contrasts(text.as_bytes(), 2, 2).unwrap();
    assert_eq!(h.r(), 2);
    assert_eq!(h.labels(), ["first", "second"]);
    assert_eq!(h.row(1), [0.0, -1.0, 0.0, 1.0]);

    let bare = "-1,0,1,0\n0,-1,0,1\n";
    let h = io::read_contrasts(bare.as_bytes(), 2, 2).unwrap();
    assert_eq!(h.r(), 2);
    assert_eq!(h.row(0), [-1.0, 0.0, 1.0, 0.0]);
}

#[test]
fn contrast_file_rejects_non_contrast_row() {
    let text = "ok,1,-1,0,0\nbad,1,1,0,0\n";
    let err = io::read_contrasts(text.as_bytes(), 2, 2).unwrap_err();
    assert!(err.is_data_error());
    assert!(err.to_string().contains("row 2"), "{err}");
}

#[test]
fn draws_round_trip() {
    let stats: Vec<f64> = (0..12).map(|i| (i as f64 - 5.5) / 3.0).collect();
    let draws = BootstrapDraws::from_matrix(3, 4, stats.clone()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("draws.csv");
    let labels: Vec<String> = dunnett(3, 2).unwrap().labels().to_vec();
    io::write_draws_csv(&path, &draws, &labels).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("replicate,"));
    let back = io::read_draws_csv(text.as_bytes()).unwrap();
    assert_eq!(back.replicates(), 3);
    assert_eq!(back.contrasts(), 4);
    assert_eq!(back.as_slice(), draws.as_slice());
}
