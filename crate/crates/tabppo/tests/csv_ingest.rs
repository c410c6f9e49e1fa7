mod common;

use tabppo::csvio::{read_raw, read_with_schema, write_csv, SchemaHints, LABEL_COLUMN};
use tabppo::Error;
use tabppo_core::data::{generate_synthetic_raw, DataError};
use tabppo_core::FeatureSchema;

use common::{small_spec, write};

#[test]
fn kinds_are_inferred_from_cells() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write(&path, "proto,bytes,port,label\ntcp,10,80,normal\nudp,2.5,443,scan\ntcp,0,80,normal\n");
    let raw = read_raw(&path, "label", &SchemaHints::default()).unwrap();
    assert_eq!(raw.categorical_names, vec!["proto"]);
    assert_eq!(raw.numerical_names, vec!["bytes", "port"]);
    assert_eq!(raw.label_names, vec!["normal", "scan"]);
    assert_eq!(raw.labels, vec![0, 1, 0]);
    assert_eq!(raw.numerical, vec![10.0, 80.0, 2.5, 443.0, 0.0, 80.0]);
}

#[test]
fn hints_override_inference() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write(&path, "proto,bytes,port,ts,label\ntcp,10,80,1,a\nudp,2,443,2,b\n");
    let hints = SchemaHints {
        categorical: vec!["port".into()],
        drop: vec!["ts".into()],
        ..SchemaHints::default()
    };
    let raw = read_raw(&path, "label", &hints).unwrap();
    assert_eq!(raw.categorical_names, vec!["proto", "port"]);
    assert_eq!(raw.numerical_names, vec!["bytes"]);
}

#[test]
fn bad_numeric_cell_names_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write(&path, "bytes,label\n1,a\n2,b\nlots,a\n");
    let hints = SchemaHints {
        numerical: vec!["bytes".into()],
        ..SchemaHints::default()
    };
    match read_raw(&path, "label", &hints) {
        Err(Error::Data(DataError::BadNumeric { row, column, value })) => {
            assert_eq!((row, column.as_str(), value.as_str()), (3, "bytes", "lots"));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn missing_label_or_hinted_column_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write(&path, "bytes,label\n1,a\n");
    assert!(matches!(
        read_raw(&path, "class", &SchemaHints::default()),
        Err(Error::Data(DataError::MissingColumn(c))) if c == "class"
    ));
    let hints = SchemaHints {
        categorical: vec!["proto".into()],
        ..SchemaHints::default()
    };
    assert!(matches!(
        read_raw(&path, "label", &hints),
        Err(Error::Data(DataError::MissingColumn(c))) if c == "proto"
    ));
}

#[test]
fn empty_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write(&path, "");
    assert!(matches!(read_raw(&path, "label", &SchemaHints::default()), Err(Error::Data(DataError::Empty))));
    write(&path, "bytes,label\n");
    assert!(matches!(read_raw(&path, "label", &SchemaHints::default()), Err(Error::Data(DataError::Empty))));
}

#[test]
fn missing_file_is_io_error() {
    let err = read_raw("/nonexistent/x.csv".as_ref(), "label", &SchemaHints::default()).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn ton_iot_preset_drops_identifiers_and_other_target() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let cats = [
        "proto", "service", "conn_state", "dns_query", "dns_qclass", "dns_qtype", "dns_rcode", "dns_AA", "dns_RD",
        "dns_RA", "dns_rejected", "ssl_version", "ssl_cipher", "ssl_resumed", "ssl_established", "ssl_subject",
        "ssl_issuer", "http_trans_depth", "http_method", "http_uri", "http_version", "http_status_code",
        "http_user_agent", "http_orig_mime_types", "http_resp_mime_types", "weird_name", "weird_addl",
        "weird_notice", "src_port", "dst_port",
    ];
    let nums = [
        "duration", "src_bytes", "dst_bytes", "missed_bytes", "src_pkts", "src_ip_bytes", "dst_pkts",
        "dst_ip_bytes", "http_request_body_len", "http_response_body_len",
    ];
    let mut header: Vec<&str> = vec!["ts", "src_ip", "dst_ip"];
    header.extend(cats);
    header.extend(nums);
    header.extend(["label", "type"]);
    let mut text = header.join(",") + "\n";
    for (i, kind) in ["normal", "mitm", "scanning"].iter().enumerate() {
        let mut row = vec![format!("{i}"), "10.0.0.1".into(), "10.0.0.2".into()];
        row.extend(cats.iter().map(|_| "-".to_string()));
        row.extend(nums.iter().map(|_| format!("{i}")));
        row.push(if i == 0 { "0".into() } else { "1".into() });
        row.push(kind.to_string());
        text += &(row.join(",") + "\n");
    }
    write(&path, &text);
    let raw = read_raw(&path, "type", &SchemaHints::ton_iot()).unwrap();
    assert_eq!(raw.categorical_names.len(), 30);
    assert_eq!(raw.numerical_names.len(), 10);
    assert!(!raw.categorical_names.iter().chain(&raw.numerical_names).any(|n| n == "label" || n == "ts"));
    assert_eq!(raw.label_names, vec!["mitm", "normal", "scanning"]);
}

#[test]
fn write_then_read_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let raw = generate_synthetic_raw(&small_spec(1)).unwrap();
    write_csv(&raw, &path).unwrap();
    let hints = SchemaHints {
        categorical: raw.categorical_names.clone(),
        ..SchemaHints::default()
    };
    let back = read_raw(&path, LABEL_COLUMN, &hints).unwrap();
    assert_eq!(back, raw);
}

#[test]
fn schema_mismatch_lists_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let raw = generate_synthetic_raw(&small_spec(1)).unwrap();
    let schema = FeatureSchema::fit(&raw).unwrap();
    write(&path, "cat_0,num_0,num_1,extra,label\nv1,0,0,0,class_0\n");
    match read_with_schema(&path, LABEL_COLUMN, &schema) {
        Err(Error::Data(DataError::SchemaMismatch(diff))) => {
            assert!(diff.iter().any(|d| d.contains("cat_1")), "{diff:?}");
            assert!(diff.iter().any(|d| d.contains("num_2")), "{diff:?}");
            assert!(diff.iter().any(|d| d.contains("extra")), "{diff:?}");
        }
        other => panic!("unexpected {other:?}"),
    }
}
