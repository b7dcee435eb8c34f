use std::path::Path;
use std::time::{Duration, Instant};

use firecase::detector::{run_batch, DetectorError, DetectorSpec, ExternalSession};
use firecase::raster::{write_mask, FireMask, MultiSpectralTile};

const HELLO: &str = r#"read h; echo '{"hello":1,"name":"sh-peer","version":"0.1"}'"#;
const ID: &str = r#"id=$(echo "$line" | sed 's/.*"id":\([0-9]*\).*/\1/')"#;

fn sh(script: String) -> Vec<String> {
    vec!["sh".into(), "-c".into(), script]
}

fn mask_file(dir: &Path) -> (String, FireMask) {
    let m = FireMask::from_pixels(48, 48, &[(3, 4), (3, 5)]);
    let p = dir.join("canned.fmk");
    write_mask(&p, &m).unwrap();
    (p.display().to_string(), m)
}

fn tiles(n: usize) -> Vec<MultiSpectralTile> {
    (0..n)
        .map(|i| MultiSpectralTile::zeros(format!("t{i}"), 48, 48))
        .collect()
}

fn start(script: String, timeout: f64) -> Result<ExternalSession, DetectorError> {
    ExternalSession::start(&sh(script), None, Duration::from_secs_f64(timeout))
}

#[test]
fn canned_peer_answers_every_request_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let (path, m) = mask_file(dir.path());
    let script = format!(r#"{HELLO}; while read line; do {ID}; echo "{{\"id\":$id,\"mask\":\"{path}\"}}"; done"#);
    let out = run_batch(&DetectorSpec::external(sh(script)), &tiles(25)).unwrap();
    assert_eq!(out.len(), 25);
    for (i, o) in out.iter().enumerate() {
        assert_eq!(o.tile_id, format!("t{i}"));
        assert_eq!(o.mask, m);
        assert_eq!(o.detector_version, "sh-peer/0.1");
    }
}

#[test]
fn malformed_line_fails_one_request_only() {
    let dir = tempfile::tempdir().unwrap();
    let (path, m) = mask_file(dir.path());
    // first request: garbage, then a late answer for it; later requests normal
    let script = format!(
        r#"{HELLO}; while read line; do {ID}; if [ "$id" = 1 ]; then echo 'garbage'; fi; echo "{{\"id\":$id,\"mask\":\"{path}\"}}"; done"#
    );
    let mut s = start(script, 10.0).unwrap();
    let t = tiles(3);
    let err = s.detect(&t[0]).unwrap_err();
    assert!(matches!(err, DetectorError::MalformedResponse { id: 1, .. }), "{err}");
    assert!(err.is_per_request());
    assert_eq!(s.detect(&t[1]).unwrap(), m);
    assert_eq!(s.detect(&t[2]).unwrap(), m);
}

#[test]
fn error_object_is_per_request() {
    let dir = tempfile::tempdir().unwrap();
    let (path, m) = mask_file(dir.path());
    let script = format!(
        r#"{HELLO}; while read line; do {ID}; if [ "$id" = 2 ]; then echo "{{\"id\":$id,\"error\":\"cannot read tile\"}}"; else echo "{{\"id\":$id,\"mask\":\"{path}\"}}"; fi; done"#
    );
    let mut s = start(script, 10.0).unwrap();
    let t = tiles(3);
    assert_eq!(s.detect(&t[0]).unwrap(), m);
    match s.detect(&t[1]) {
        Err(DetectorError::Remote { id: 2, message }) => assert_eq!(message, "cannot read tile"),
        other => panic!("{other:?}"),
    }
    assert_eq!(s.detect(&t[2]).unwrap(), m);
}

#[test]
fn silent_peer_times_out() {
    let started = Instant::now();
    let mut s = start(format!("{HELLO}; sleep 30"), 0.5).unwrap();
    let err = s.detect(&tiles(1)[0]).unwrap_err();
    assert!(matches!(err, DetectorError::Timeout { .. }), "{err}");
    assert!(started.elapsed() < Duration::from_secs(10));
    assert!(s.detect(&tiles(1)[0]).is_err());
}

#[test]
fn crash_reports_exit_and_stderr() {
    let script = format!("{HELLO}; read line; echo 'model weights missing' >&2; exit 3");
    let mut s = start(script, 10.0).unwrap();
    match s.detect(&tiles(1)[0]) {
        Err(DetectorError::Exited { status, stderr }) => {
            assert!(status.contains('3'), "{status}");
            assert!(stderr.contains("model weights missing"), "{stderr}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn batch_aborts_on_first_failure() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = mask_file(dir.path());
    let script = format!(
        r#"{HELLO}; while read line; do {ID}; if [ "$id" = 3 ]; then exit 1; fi; echo "{{\"id\":$id,\"mask\":\"{path}\"}}"; done"#
    );
    let err = run_batch(&DetectorSpec::external(sh(script)), &tiles(5)).unwrap_err();
    assert!(matches!(err, DetectorError::Exited { .. }), "{err}");
}

#[test]
fn handshake_and_id_violations() {
    let err = start("read h; echo '{\"hello\":2}'".into(), 5.0).err().unwrap();
    assert!(matches!(err, DetectorError::Protocol { .. }), "{err}");

    let err = start("read h; echo nope".into(), 5.0).err().unwrap();
    assert!(matches!(err, DetectorError::Protocol { .. }), "{err}");

    let script = format!(r#"{HELLO}; read line; echo '{{"id":99,"mask":"x"}}'; sleep 5"#);
    let mut s = start(script, 5.0).unwrap();
    let err = s.detect(&tiles(1)[0]).unwrap_err();
    assert!(matches!(err, DetectorError::Protocol { .. }), "{err}");

    let err = start(String::new(), 5.0).err().unwrap();
    assert!(matches!(err, DetectorError::Exited { .. }), "{err}");

    let err = ExternalSession::start(&["/nonexistent/detector".into()], None, Duration::from_secs(1))
        .err()
        .unwrap();
    assert!(matches!(err, DetectorError::Spawn { .. }), "{err}");
}

#[test]
fn wrong_mask_dimensions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("small.fmk");
    write_mask(&p, &FireMask::empty(8, 8)).unwrap();
    let script = format!(
        r#"{HELLO}; while read line; do {ID}; echo "{{\"id\":$id,\"mask\":\"{}\"}}"; done"#,
        p.display()
    );
    let mut s = start(script, 5.0).unwrap();
    let err = s.detect(&tiles(1)[0]).unwrap_err();
    assert!(matches!(err, DetectorError::Mask { .. }), "{err}");
}
