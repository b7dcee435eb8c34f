//! Child side of the external detector protocol, answering with the
//! baseline threshold rule. Used as a reference peer in tests and by the
//! CLI's hidden `serve-baseline` command.

use std::io::{self, BufRead, Write};
use std::path::Path;

use serde_json::{json, Value};

use super::BaselineParams;
use crate::raster::io::{read_tile, write_mask};

fn answer(params: &BaselineParams, out_dir: &Path, req: &Value) -> Value {
    let id = req.get("id").cloned().unwrap_or(Value::Null);
    let Some(n) = id.as_u64() else {
        return json!({"id": id, "error": "request without integer id"});
    };
    let Some(tile_path) = req.get("tile").and_then(Value::as_str) else {
        return json!({"id": n, "error": "request without tile path"});
    };
    let tile = match read_tile(Path::new(tile_path)) {
        Ok(t) => t,
        Err(e) => return json!({"id": n, "error": e.to_string()}),
    };
    let out = out_dir.join(format!("resp-{n}.fmk"));
    match write_mask(&out, &params.apply(&tile)) {
        Ok(()) => json!({"id": n, "mask": out.to_string_lossy()}),
        Err(e) => json!({"id": n, "error": e.to_string()}),
    }
}

/// Serves requests from `input` until end of stream. Masks are written
/// into `out_dir`.
pub fn serve<R: BufRead, W: Write>(params: &BaselineParams, input: R, mut output: W, out_dir: &Path) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<Value>(&line) {
            Ok(v) if v.get("hello").is_some() => json!({
                "hello": 1,
                "name": "firecase-baseline",
                "version": env!("CARGO_PKG_VERSION"),
            }),
            Ok(v) => answer(params, out_dir, &v),
            Err(e) => json!({"id": null, "error": format!("unparseable request: {e}")}),
        };
        writeln!(output, "{reply}")?;
        output.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::io::read_mask;
    use crate::raster::{write_tile, MultiSpectralTile};

    #[test]
    fn in_process_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let tile = dir.path().join("t.ftl");
        write_tile(&tile, &MultiSpectralTile::zeros("t", 48, 48)).unwrap();
        let input = format!(
            "{{\"hello\":1}}\n{{\"id\":1,\"tile\":\"{}\"}}\n{{\"id\":2,\"tile\":\"/nonexistent.ftl\"}}\nnot json\n",
            tile.display()
        );
        let mut out = Vec::new();
        serve(&BaselineParams::defaults(), input.as_bytes(), &mut out, dir.path()).unwrap();
        let replies: Vec<Value> = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(replies.len(), 4);
        assert_eq!(replies[0]["hello"], 1);
        assert_eq!(replies[1]["id"], 1);
        let mask = read_mask(Path::new(replies[1]["mask"].as_str().unwrap())).unwrap();
        assert!(!mask.has_fire());
        assert_eq!(replies[2]["id"], 2);
        assert!(replies[2]["error"].is_string());
        assert!(replies[3]["id"].is_null());
    }
}
