//! Subcommand-level integration tests: exit codes, error messages and the
//! file contracts between stages.

use std::path::Path;
use std::process::{Command, Output};

use textmap_core::ocr::parse_canonical_ocr;
use textmap_core::raster::read_raster3_bin;

fn textmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_textmap"))
        .args(args)
        .output()
        .expect("spawn textmap")
}

fn assert_ok(output: &Output) {
    assert!(
        output.status.success(),
        "expected success, got {:?}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn assert_exit2(output: &Output) -> String {
    assert_eq!(
        output.status.code(),
        Some(2),
        "expected exit 2\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Small seeded corpus under `root/synth`, returning (ocr, ann) dirs.
fn make_corpus(root: &Path, n: u32) -> (String, String) {
    let out = root.join("synth");
    assert_ok(&textmap(&[
        "synth",
        "--n",
        &n.to_string(),
        "--seed",
        "11",
        "--out",
        out.to_str().unwrap(),
    ]));
    (
        out.join("ocr").to_string_lossy().into_owned(),
        out.join("ann").to_string_lossy().into_owned(),
    )
}

fn build_stats(root: &Path, ocr: &str, ann: &str) -> String {
    let stats = root.join("stats.json").to_string_lossy().into_owned();
    assert_ok(&textmap(&[
        "build-stats",
        "--ocr",
        ocr,
        "--ann",
        ann,
        "--out",
        &stats,
    ]));
    stats
}

#[test]
fn help_exits_zero_and_lists_subcommands() {
    let output = textmap(&["--help"]);
    assert_ok(&output);
    let text = String::from_utf8_lossy(&output.stdout);
    for sub in ["synth", "build-stats", "gen-textmap", "export-6ch", "detect", "eval", "overlay"] {
        assert!(text.contains(sub), "help missing `{sub}`");
    }
}

#[test]
fn unknown_flag_exits_two() {
    let output = textmap(&["synth", "--does-not-exist"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn synth_invalid_config_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let stderr = assert_exit2(&textmap(&[
        "synth",
        "--n",
        "1",
        "--typo-rate",
        "2.0",
        "--out",
        tmp.path().join("synth").to_str().unwrap(),
    ]));
    assert!(stderr.contains("ocr_typo_rate"), "{stderr}");
}

#[test]
fn build_stats_on_empty_dirs_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let ocr = tmp.path().join("ocr");
    let ann = tmp.path().join("ann");
    std::fs::create_dir_all(&ocr).unwrap();
    std::fs::create_dir_all(&ann).unwrap();
    let stderr = assert_exit2(&textmap(&[
        "build-stats",
        "--ocr",
        ocr.to_str().unwrap(),
        "--ann",
        ann.to_str().unwrap(),
        "--out",
        tmp.path().join("stats.json").to_str().unwrap(),
    ]));
    assert!(stderr.contains("empty corpus"), "{stderr}");
}

#[test]
fn build_stats_orphan_doc_id_exits_two_naming_it() {
    let tmp = tempfile::tempdir().unwrap();
    let (ocr, ann) = make_corpus(tmp.path(), 3);
    std::fs::remove_file(Path::new(&ann).join("synth-000001.json")).unwrap();
    let stderr = assert_exit2(&textmap(&[
        "build-stats",
        "--ocr",
        &ocr,
        "--ann",
        &ann,
        "--out",
        tmp.path().join("stats.json").to_str().unwrap(),
    ]));
    assert!(stderr.contains("synth-000001"), "{stderr}");
    assert!(stderr.contains("unmatched doc_id"), "{stderr}");
}

#[test]
fn build_stats_produces_nonempty_dictionaries() {
    let tmp = tempfile::tempdir().unwrap();
    let (ocr, ann) = make_corpus(tmp.path(), 12);
    let stats = build_stats(tmp.path(), &ocr, &ann);
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&stats).unwrap()).unwrap();
    for category in ["ingredients", "nutritional_facts"] {
        let dict = json["dictionaries"][category].as_array().unwrap();
        assert!(!dict.is_empty(), "{category} dictionary is empty");
    }
    assert_eq!(json["version"], 1);
    assert_eq!(json["alpha"], 1.0);
    assert_eq!(json["fuzzy_floor"], 0.8);
}

#[test]
fn gen_textmap_unknown_category_exits_two_with_allowed_values() {
    let tmp = tempfile::tempdir().unwrap();
    let (ocr, ann) = make_corpus(tmp.path(), 2);
    let stats = build_stats(tmp.path(), &ocr, &ann);
    let stderr = assert_exit2(&textmap(&[
        "gen-textmap",
        "--ocr",
        &ocr,
        "--stats",
        &stats,
        "--category",
        "recipes",
        "--out",
        tmp.path().join("maps").to_str().unwrap(),
    ]));
    assert!(stderr.contains("ingredients"), "{stderr}");
    assert!(stderr.contains("nutritional_facts"), "{stderr}");
}

#[test]
fn gen_textmap_rejects_stats_missing_the_category() {
    let tmp = tempfile::tempdir().unwrap();
    let (ocr, ann) = make_corpus(tmp.path(), 2);
    let stats = build_stats(tmp.path(), &ocr, &ann);
    let text = std::fs::read_to_string(&stats)
        .unwrap()
        .replace("\"nutritional_facts\"", "\"placeholder_category\"");
    // The categories list no longer mentions nutritional_facts.
    let edited = tmp.path().join("edited-stats.json");
    std::fs::write(&edited, text).unwrap();
    let stderr = assert_exit2(&textmap(&[
        "gen-textmap",
        "--ocr",
        &ocr,
        "--stats",
        edited.to_str().unwrap(),
        "--category",
        "nutritional_facts",
        "--out",
        tmp.path().join("maps").to_str().unwrap(),
    ]));
    assert!(stderr.contains("does not cover"), "{stderr}");
}

#[test]
fn gen_textmap_nonzero_pixels_lie_within_word_boxes() {
    let tmp = tempfile::tempdir().unwrap();
    let (ocr, ann) = make_corpus(tmp.path(), 3);
    let stats = build_stats(tmp.path(), &ocr, &ann);
    let maps = tmp.path().join("maps");
    assert_ok(&textmap(&[
        "gen-textmap",
        "--ocr",
        &ocr,
        "--stats",
        &stats,
        "--category",
        "ingredients",
        "--out",
        maps.to_str().unwrap(),
    ]));
    for entry in std::fs::read_dir(&maps).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("bin") {
            continue;
        }
        let doc_id = path.file_stem().unwrap().to_string_lossy().into_owned();
        let map = read_raster3_bin(&std::fs::read(&path).unwrap()).unwrap();
        let doc = parse_canonical_ocr(
            &std::fs::read(Path::new(&ocr).join(format!("{doc_id}.json"))).unwrap(),
        )
        .unwrap();
        for y in 0..map.height() {
            for x in 0..map.width() {
                if map.get(x, y) == [0, 0, 0] {
                    continue;
                }
                let covered = doc.words.iter().any(|w| {
                    x >= w.bbox.x0() && x < w.bbox.x1() && y >= w.bbox.y0() && y < w.bbox.y1()
                });
                assert!(covered, "{doc_id}: nonzero pixel ({x}, {y}) outside all word boxes");
            }
        }
    }
}

#[test]
fn gen_textmap_empty_document_yields_all_zero_map() {
    let tmp = tempfile::tempdir().unwrap();
    let (ocr, ann) = make_corpus(tmp.path(), 2);
    let stats = build_stats(tmp.path(), &ocr, &ann);
    let empty_dir = tmp.path().join("empty-ocr");
    std::fs::create_dir_all(&empty_dir).unwrap();
    std::fs::write(
        empty_dir.join("empty.json"),
        br#"{"doc_id":"empty","image":{"width":40,"height":30},"words":[]}"#,
    )
    .unwrap();
    let maps = tmp.path().join("maps-empty");
    assert_ok(&textmap(&[
        "gen-textmap",
        "--ocr",
        empty_dir.to_str().unwrap(),
        "--stats",
        &stats,
        "--category",
        "ingredients",
        "--out",
        maps.to_str().unwrap(),
    ]));
    let map = read_raster3_bin(&std::fs::read(maps.join("empty.bin")).unwrap()).unwrap();
    assert!(map.data().iter().all(|&b| b == 0));
}

#[test]
fn gcv_format_flag_parses_cloud_annotations() {
    let tmp = tempfile::tempdir().unwrap();
    let gcv_dir = tmp.path().join("gcv");
    std::fs::create_dir_all(&gcv_dir).unwrap();
    std::fs::write(
        gcv_dir.join("pack-1.json"),
        br#"{"fullTextAnnotation": {"pages": [{"width": 80, "height": 40, "blocks": [{"paragraphs": [{"words": [
            {"boundingBox": {"vertices": [{"x":4,"y":4},{"x":40,"y":4},{"x":40,"y":14},{"x":4,"y":14}]},
             "symbols": [{"text":"m"},{"text":"i"},{"text":"l"},{"text":"k"}]}
        ]}]}]}]}}"#,
    )
    .unwrap();
    let ann_dir = tmp.path().join("gcv-ann");
    std::fs::create_dir_all(&ann_dir).unwrap();
    std::fs::write(
        ann_dir.join("pack-1.json"),
        br#"{"doc_id": "pack-1", "regions": [{"category": "ingredients", "bbox": [0, 0, 60, 20]}]}"#,
    )
    .unwrap();
    let stats = tmp.path().join("gcv-stats.json");
    assert_ok(&textmap(&[
        "build-stats",
        "--ocr",
        gcv_dir.to_str().unwrap(),
        "--ann",
        ann_dir.to_str().unwrap(),
        "--ocr-format",
        "gcv",
        "--out",
        stats.to_str().unwrap(),
    ]));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&stats).unwrap()).unwrap();
    assert_eq!(json["words"]["milk"]["total"], 1);
    assert_eq!(json["words"]["milk"]["in_region"]["ingredients"], 1);
}

#[test]
fn green_config_override_changes_the_map() {
    let tmp = tempfile::tempdir().unwrap();
    let (ocr, ann) = make_corpus(tmp.path(), 2);
    let stats = build_stats(tmp.path(), &ocr, &ann);
    let config = tmp.path().join("triggers.json");
    std::fs::write(
        &config,
        br#"{"ingredients": {"green_triggers": ["zq"]}}"#,
    )
    .unwrap();
    let default_maps = tmp.path().join("maps-default");
    let custom_maps = tmp.path().join("maps-custom");
    for (out, extra) in [(&default_maps, None), (&custom_maps, Some(config.as_path()))] {
        let mut args = vec![
            "gen-textmap",
            "--ocr",
            &ocr,
            "--stats",
            &stats,
            "--category",
            "ingredients",
            "--out",
            out.to_str().unwrap(),
        ];
        if let Some(cfg) = extra {
            args.push("--green-config");
            args.push(cfg.to_str().unwrap());
        }
        assert_ok(&textmap(&args));
    }
    // Commas no longer trigger green, so the maps must differ.
    let a = std::fs::read(default_maps.join("synth-000000.bin")).unwrap();
    let b = std::fs::read(custom_maps.join("synth-000000.bin")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn detect_on_all_zero_map_writes_empty_detections() {
    let tmp = tempfile::tempdir().unwrap();
    let maps = tmp.path().join("maps");
    std::fs::create_dir_all(&maps).unwrap();
    let zero = textmap_core::raster::Raster3::new_zero(64, 64);
    std::fs::write(
        maps.join("blank.bin"),
        textmap_core::raster::write_raster3_bin(&zero),
    )
    .unwrap();
    let out = tmp.path().join("detections.json");
    assert_ok(&textmap(&[
        "detect",
        "--maps",
        maps.to_str().unwrap(),
        "--category",
        "ingredients",
        "--out",
        out.to_str().unwrap(),
    ]));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 0);
}

#[test]
fn eval_missing_annotations_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dets = tmp.path().join("detections.json");
    std::fs::write(&dets, b"[]").unwrap();
    let empty_ann = tmp.path().join("ann");
    std::fs::create_dir_all(&empty_ann).unwrap();
    let stderr = assert_exit2(&textmap(&[
        "eval",
        "--detections",
        dets.to_str().unwrap(),
        "--ann",
        empty_ann.to_str().unwrap(),
        "--out",
        tmp.path().join("report.json").to_str().unwrap(),
    ]));
    assert!(stderr.contains("missing annotations"), "{stderr}");
}

/// Full small pipeline returning the parsed report for given thresholds.
fn report_for(
    root: &Path,
    ocr: &str,
    ann: &str,
    stats: &str,
    iou: &str,
    conf: &str,
    tag: &str,
) -> serde_json::Value {
    let maps = root.join(format!("maps-{tag}"));
    let dets = root.join(format!("det-{tag}.json"));
    let report = root.join(format!("report-{tag}.json"));
    assert_ok(&textmap(&[
        "gen-textmap",
        "--ocr",
        ocr,
        "--stats",
        stats,
        "--category",
        "ingredients",
        "--out",
        maps.to_str().unwrap(),
    ]));
    assert_ok(&textmap(&[
        "detect",
        "--maps",
        maps.to_str().unwrap(),
        "--category",
        "ingredients",
        "--out",
        dets.to_str().unwrap(),
    ]));
    assert_ok(&textmap(&[
        "eval",
        "--detections",
        dets.to_str().unwrap(),
        "--ann",
        ann,
        "--iou-threshold",
        iou,
        "--confidence-threshold",
        conf,
        "--out",
        report.to_str().unwrap(),
    ]));
    serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap()
}

#[test]
fn eval_threshold_monotonicity() {
    let tmp = tempfile::tempdir().unwrap();
    let (ocr, ann) = make_corpus(tmp.path(), 8);
    let stats = build_stats(tmp.path(), &ocr, &ann);

    let baseline = report_for(tmp.path(), &ocr, &ann, &stats, "0.5", "0.7", "base");
    let strict_iou = report_for(tmp.path(), &ocr, &ann, &stats, "1.0", "0.7", "iou1");
    let open_gate = report_for(tmp.path(), &ocr, &ann, &stats, "0.5", "0.0", "conf0");

    let recall = |r: &serde_json::Value| r["totals"]["recall"].as_f64().unwrap();
    assert!(
        recall(&strict_iou) <= recall(&baseline),
        "recall grew when IoU threshold rose: {} > {}",
        recall(&strict_iou),
        recall(&baseline)
    );

    let kept = |r: &serde_json::Value| {
        r["totals"]["tp"].as_u64().unwrap() + r["totals"]["fp"].as_u64().unwrap()
    };
    assert!(
        kept(&open_gate) >= kept(&baseline),
        "gate at 0 kept fewer predictions: {} < {}",
        kept(&open_gate),
        kept(&baseline)
    );
}

#[test]
fn synth_writes_manifest_with_resolved_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("synth");
    assert_ok(&textmap(&[
        "synth",
        "--n",
        "2",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tool"], "textmap");
    assert_eq!(manifest["subcommand"], "synth");
    assert_eq!(manifest["documents"], 2);
    // Defaults are resolved into the manifest, not left implicit.
    assert_eq!(manifest["parameters"]["typo_rate"], 0.02);
    assert_eq!(manifest["parameters"]["seed"], 3);
    assert!(manifest["duration_ms"].is_u64());
}

#[test]
fn export_6ch_dimension_mismatch_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let images = tmp.path().join("img");
    let maps = tmp.path().join("maps");
    std::fs::create_dir_all(&images).unwrap();
    std::fs::create_dir_all(&maps).unwrap();
    let image = textmap_core::raster::Raster3::new_zero(8, 8);
    std::fs::write(
        images.join("d.png"),
        textmap_core::raster::write_png(&image).unwrap(),
    )
    .unwrap();
    let map = textmap_core::raster::Raster3::new_zero(16, 16);
    std::fs::write(maps.join("d.bin"), textmap_core::raster::write_raster3_bin(&map)).unwrap();
    let stderr = assert_exit2(&textmap(&[
        "export-6ch",
        "--images",
        images.to_str().unwrap(),
        "--maps",
        maps.to_str().unwrap(),
        "--out",
        tmp.path().join("t6").to_str().unwrap(),
    ]));
    assert!(stderr.contains("8x8") && stderr.contains("16x16"), "{stderr}");
}

#[test]
fn export_6ch_orphans_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let images = tmp.path().join("img");
    let maps = tmp.path().join("maps");
    std::fs::create_dir_all(&images).unwrap();
    std::fs::create_dir_all(&maps).unwrap();
    let raster = textmap_core::raster::Raster3::new_zero(8, 8);
    std::fs::write(
        images.join("only-image.png"),
        textmap_core::raster::write_png(&raster).unwrap(),
    )
    .unwrap();
    let stderr = assert_exit2(&textmap(&[
        "export-6ch",
        "--images",
        images.to_str().unwrap(),
        "--maps",
        maps.to_str().unwrap(),
        "--out",
        tmp.path().join("t6").to_str().unwrap(),
    ]));
    assert!(stderr.contains("only-image"), "{stderr}");
}
