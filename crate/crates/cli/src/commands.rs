use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use ukiyo_core::color::{
    compose, decompose, estimate_palette, read_layer_stack, recolor, transfer_palette, write_layer_stack, LayerStack,
    PaletteFile, StackPaths,
};
use ukiyo_core::corpus::{
    import_landmarks, join_faces, painter_summary, parse_metadata, read_corpus, write_corpus, year_histogram,
    LandmarkSet, MetadataFormat, UNKNOWN_PAINTER,
};
use ukiyo_core::embedding::{lda_fit, pca_fit, tsne_embed, FeatureMatrix, TsneParams};
use ukiyo_core::geometry::{
    alignment_quad, angle_features_batch, crop_face, features_to_csv, quality_report, select_high_quality,
    HighQualitySet, QualityReport,
};
use ukiyo_core::raster::encode_rgb_png;
use ukiyo_core::RgbRaster;
use ukiyo_service::ServiceConfig;

use crate::args::*;
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read(path)?).map_err(|_| CliError::invalid(format!("{}: not valid UTF-8", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Refuses an output path that names one of the inputs, and one whose
/// directory does not exist.
fn check_output(out: &Path, inputs: &[&Path]) -> Result<()> {
    if let Ok(target) = out.canonicalize() {
        if inputs.iter().any(|i| i.canonicalize().is_ok_and(|i| i == target)) {
            return Err(CliError::invalid(format!("{}: output would overwrite an input", out.display())));
        }
    }
    match out.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) if !dir.is_dir() => Err(CliError::io(out, "directory does not exist")),
        _ => Ok(()),
    }
}

fn csv_text(rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.write_record(row).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("flushing to memory")).expect("utf-8 fields")
}

fn load_image(path: &Path) -> Result<RgbRaster> {
    RgbRaster::decode(&read(path)?).map_err(|e| CliError::from(e).in_file(path))
}

fn load_landmarks(path: &Path) -> Result<Vec<LandmarkSet>> {
    import_landmarks(read(path)?.as_slice()).map_err(|e| CliError::from(e).in_file(path))
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Stats(a) => stats(a),
        Command::Align(a) => align(a),
        Command::Features(a) => features(a),
        Command::Quality(a) => quality(a),
        Command::Embed(a) => embed(a),
        Command::Separate(a) => separate(a),
        Command::Recolor(a) => recolor_cmd(a),
        Command::Transfer(a) => transfer(a),
        Command::Compose(a) => compose_cmd(a),
        Command::Serve(a) => serve(a),
    }
}

fn ingest(a: IngestArgs) -> Result<()> {
    let meta_bytes = read(&a.metadata)?;
    let sets = load_landmarks(&a.landmarks)?;
    check_output(&a.out, &[&a.metadata, &a.landmarks])?;
    let format = match a.format {
        Some(MetadataFormatArg::Jsonl) => MetadataFormat::Jsonl,
        Some(MetadataFormatArg::Csv) => MetadataFormat::Csv,
        None => match a.metadata.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "json" | "ndjson") => MetadataFormat::Jsonl,
            _ => MetadataFormat::Csv,
        },
    };
    let (records, warnings) =
        parse_metadata(meta_bytes.as_slice(), format).map_err(|e| CliError::from(e).in_file(&a.metadata))?;
    for w in &warnings {
        eprintln!("{}: line {}: {} ({})", a.metadata.display(), w.line, w.message, w.object_id);
    }
    let incomplete = sets.iter().filter(|s| !s.is_complete()).count();
    let joined = join_faces(&records, &sets);
    write(&a.out, write_corpus(&joined.faces))?;
    let matched = joined.faces.iter().filter(|f| f.metadata.is_some()).count();
    eprintln!(
        "{} faces ({} incomplete, {} with metadata); {} metadata rows without faces",
        joined.faces.len(),
        incomplete,
        matched,
        joined.unmatched_metadata.len()
    );
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    let faces = read_corpus(read(&a.corpus)?.as_slice()).map_err(|e| CliError::from(e).in_file(&a.corpus))?;
    for out in a.histogram.iter().chain(&a.painters) {
        check_output(out, &[&a.corpus])?;
    }
    let hist = year_histogram(&faces, a.bin_width)?;
    let hist_csv = csv_text(
        std::iter::once(vec!["bin_start".into(), "bin_end".into(), "count".into()])
            .chain(hist.iter().map(|(b, n)| vec![b.to_string(), (b + a.bin_width).to_string(), n.to_string()])),
    );
    let year = |y: Option<i32>| y.map(|y| y.to_string()).unwrap_or_default();
    let painters_csv = csv_text(
        std::iter::once(["painter", "face_count", "min_year", "max_year"].map(String::from).to_vec()).chain(
            painter_summary(&faces)
                .into_iter()
                .map(|r| vec![r.painter, r.face_count.to_string(), year(r.min_year), year(r.max_year)]),
        ),
    );
    match (&a.histogram, &a.painters) {
        (None, None) => print!("{hist_csv}\n{painters_csv}"),
        (h, p) => {
            if let Some(h) = h {
                write(h, hist_csv)?;
            }
            if let Some(p) = p {
                write(p, painters_csv)?;
            }
        }
    }
    Ok(())
}

fn find_image(dir: &Path, image_id: &str) -> Result<PathBuf> {
    ["png", "jpg", "jpeg", "PNG", "JPG", "JPEG"]
        .iter()
        .map(|ext| dir.join(format!("{image_id}.{ext}")))
        .find(|p| p.is_file())
        .ok_or_else(|| CliError::io(&dir.join(image_id), "no .png/.jpg/.jpeg image for this id"))
}

fn align(a: AlignArgs) -> Result<()> {
    let sets = load_landmarks(&a.landmarks)?;
    if a.size < ukiyo_core::geometry::MIN_CROP_SIZE {
        return Err(ukiyo_core::geometry::GeometryError::InvalidOutputSize(a.size).into());
    }
    if !a.images.is_dir() {
        return Err(CliError::io(&a.images, "not a directory"));
    }
    create_dir(&a.out)?;

    let mut quads = String::new();
    let mut cached: Option<(String, image::RgbImage)> = None;
    let mut written = 0;
    for set in &sets {
        let quad = match alignment_quad(set) {
            Ok(q) => q,
            Err(e) => {
                eprintln!("skipping {e}");
                continue;
            }
        };
        if cached.as_ref().is_none_or(|(id, _)| *id != set.image_id) {
            let path = find_image(&a.images, &set.image_id)?;
            let img = load_image(&path)?.to_rgb8();
            cached = Some((set.image_id.clone(), img));
        }
        let (_, img) = cached.as_ref().expect("loaded above");
        let crop = crop_face(img, &quad, a.size)?;
        let path = a.out.join(format!("{}_{}.png", set.image_id, set.face_index));
        write(&path, encode_rgb_png(&crop)?)?;
        let corners: Vec<[f64; 2]> = quad.corners_normalized().iter().map(|p| [p.x, p.y]).collect();
        let line = serde_json::json!({
            "face_id": set.face_id(),
            "crop": path.file_name().map(|n| n.to_string_lossy().into_owned()),
            "corners": corners,
            "side_px": quad.side_length(),
        });
        quads.push_str(&line.to_string());
        quads.push('\n');
        written += 1;
    }
    write(&a.out.join("quads.jsonl"), quads)?;
    eprintln!("{written} of {} faces cropped", sets.len());
    Ok(())
}

fn load_hq(choice: &str) -> Result<HighQualitySet> {
    if choice == "default" {
        return Ok(HighQualitySet::default_set());
    }
    let path = Path::new(choice);
    HighQualitySet::parse(&read_text(path)?).map_err(|e| CliError::from(e).in_file(path))
}

fn features(a: FeaturesArgs) -> Result<()> {
    let (input, sets) = match (&a.landmarks, &a.corpus) {
        (Some(path), _) => (path, load_landmarks(path)?),
        (None, Some(path)) => {
            let faces = read_corpus(read(path)?.as_slice()).map_err(|e| CliError::from(e).in_file(path))?;
            (path, faces.into_iter().map(|f| f.landmarks).collect())
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let hq = load_hq(&a.hq)?;
    check_output(&a.out, &[input, Path::new(&a.hq)])?;
    let mut rows = Vec::with_capacity(sets.len());
    for result in angle_features_batch(&sets, &hq) {
        match result {
            Ok(v) => rows.push(v),
            Err(e) => eprintln!("skipping {e}"),
        }
    }
    write(&a.out, features_to_csv(&rows, hq.feature_len()))?;
    eprintln!("{} of {} faces, {} angles each", rows.len(), sets.len(), hq.feature_len());
    Ok(())
}

fn quality(a: QualityArgs) -> Result<()> {
    let jaw: BTreeSet<_> = parse_kinds(&a.jaw_exceptions).map_err(CliError::invalid)?.into_iter().collect();
    let excl: BTreeSet<_> = parse_kinds(&a.exclude).map_err(CliError::invalid)?.into_iter().collect();
    let mut inputs: Vec<&Path> = Vec::new();
    let report = match (&a.detected, &a.expert, &a.report) {
        (Some(det), Some(exp), _) => {
            inputs.extend([det.as_path(), exp.as_path()]);
            quality_report(&load_landmarks(det)?, &load_landmarks(exp)?)?
        }
        (_, _, Some(path)) => {
            inputs.push(path);
            QualityReport::from_csv(read(path)?.as_slice()).map_err(|e| CliError::from(e).in_file(path))?
        }
        _ => unreachable!("clap requires an input"),
    };
    for out in a.out.iter().chain(&a.hq_out) {
        check_output(out, &inputs)?;
    }
    let hq = select_high_quality(&report, a.threshold, &jaw, &excl)?;
    if let Some(out) = &a.out {
        write(out, report.to_csv())?;
    }
    match &a.hq_out {
        Some(out) => write(out, hq.to_text())?,
        None => print!("{}", hq.to_text()),
    }
    eprintln!("{} kinds selected, {} angles", hq.len(), hq.feature_len());
    Ok(())
}

fn painter_labels(corpus: &Path, ids: &[String]) -> Result<Vec<String>> {
    let faces = read_corpus(read(corpus)?.as_slice()).map_err(|e| CliError::from(e).in_file(corpus))?;
    let by_id: HashMap<&str, &str> =
        faces.iter().map(|f| (f.face_id.as_str(), f.painter().unwrap_or(UNKNOWN_PAINTER))).collect();
    let mut missing = 0;
    let labels = ids
        .iter()
        .map(|id| {
            by_id.get(id.as_str()).map(|p| p.to_string()).unwrap_or_else(|| {
                missing += 1;
                UNKNOWN_PAINTER.to_string()
            })
        })
        .collect();
    if missing > 0 {
        eprintln!("{missing} faces not in {}; labelled {UNKNOWN_PAINTER}", corpus.display());
    }
    Ok(labels)
}

fn embed(a: EmbedArgs) -> Result<()> {
    let mut x = FeatureMatrix::read_csv(read(&a.features)?.as_slice()).map_err(|e| CliError::from(e).in_file(&a.features))?;
    let mut inputs = vec![a.features.as_path()];
    if let Some(corpus) = &a.corpus {
        inputs.push(corpus);
        let labels = painter_labels(corpus, x.ids())?;
        x = x.with_labels(labels)?;
    }
    for out in std::iter::once(&a.out).chain(&a.projection) {
        check_output(out, &inputs)?;
    }
    if a.zscore {
        x = x.z_scored();
    }
    let (embedding, projection) = match a.method {
        MethodArg::Pca => {
            let proj = pca_fit(&x, a.k.unwrap_or(2))?;
            (proj.transform(&x)?, Some(proj))
        }
        MethodArg::Lda => {
            let labels = x.labels().ok_or_else(|| CliError::invalid("lda needs --corpus for painter labels"))?;
            let classes = labels.iter().collect::<BTreeSet<_>>().len();
            let proj = lda_fit(&x, a.k.unwrap_or_else(|| classes.saturating_sub(1).clamp(1, 2)))?;
            (proj.transform(&x)?, Some(proj))
        }
        MethodArg::Tsne => {
            if a.k.is_some_and(|k| k != 2) {
                return Err(CliError::invalid("t-SNE embeds into exactly 2 dimensions"));
            }
            if a.projection.is_some() {
                return Err(CliError::invalid("t-SNE has no reusable projection; drop --projection"));
            }
            let params = TsneParams { perplexity: a.perplexity, seed: a.seed, iters: a.iters, ..TsneParams::default() };
            let result = tsne_embed(&x, &params)?;
            eprintln!("KL divergence {:.6} -> {:.6}", result.initial_kl, result.final_kl);
            (result.embedding, None)
        }
    };
    write(&a.out, embedding.to_csv())?;
    if let (Some(path), Some(proj)) = (&a.projection, projection) {
        write(path, proj.to_json())?;
    }
    Ok(())
}

fn separate(a: SeparateArgs) -> Result<()> {
    let image = load_image(&a.input)?;
    let stem = match a.stem {
        Some(s) => s,
        None => a
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| CliError::invalid("cannot derive a stem from the input name; pass --stem"))?,
    };
    create_dir(&a.out)?;
    let paths = StackPaths::new(&a.out, stem);
    check_output(&paths.layer(0), &[&a.input])?;
    let palette = estimate_palette(&image, a.k, a.seed)?;
    let stack = decompose(&image, &palette, a.lambda)?;
    let written = write_layer_stack(&stack, &paths, a.lambda, a.seed, a.error_map)?;
    eprintln!("{} layers, max clipping error {:.6}", stack.layer_count(), stack.max_clip_error());
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn load_stack(prefix: &Path) -> Result<(LayerStack, PaletteFile, StackPaths)> {
    let paths = StackPaths::from_prefix(prefix);
    for path in std::iter::once(paths.palette()).chain(std::iter::once(paths.layer(0))) {
        if !path.is_file() {
            return Err(CliError::io(&path, "no such file"));
        }
    }
    let (stack, file) = read_layer_stack(&paths).map_err(|e| CliError::from(e).in_file(prefix))?;
    Ok((stack, file, paths))
}

fn write_composed(stack: &LayerStack, out: &Path) -> Result<()> {
    write(out, encode_rgb_png(&compose(stack).to_rgb8())?)
}

fn stack_inputs(paths: &StackPaths, k: usize) -> Vec<PathBuf> {
    (0..k).map(|i| paths.layer(i)).chain([paths.palette(), paths.error_map()]).collect()
}

fn recolor_cmd(a: RecolorArgs) -> Result<()> {
    let (stack, _, paths) = load_stack(&a.layers)?;
    let new = PaletteFile::read(&a.palette).map_err(|e| CliError::from(e).in_file(&a.palette))?.palette()?;
    let mut inputs = stack_inputs(&paths, stack.layer_count());
    inputs.push(a.palette.clone());
    check_output(&a.out, &inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    write_composed(&recolor(&stack, &new)?, &a.out)
}

fn transfer(a: TransferArgs) -> Result<()> {
    let (stack, file, paths) = load_stack(&a.layers)?;
    let reference = load_image(&a.reference)?;
    let mut inputs = stack_inputs(&paths, stack.layer_count());
    inputs.push(a.reference.clone());
    for out in std::iter::once(&a.out).chain(&a.palette_out) {
        check_output(out, &inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    }
    let moved = transfer_palette(&stack, &reference, a.seed)?;
    write_composed(&moved, &a.out)?;
    if let Some(path) = &a.palette_out {
        let palette = PaletteFile { colors: moved.palette().colors().to_vec(), lambda: file.lambda, seed: a.seed };
        write(path, palette.to_json())?;
    }
    Ok(())
}

fn compose_cmd(a: ComposeArgs) -> Result<()> {
    let (stack, _, paths) = load_stack(&a.layers)?;
    let inputs = stack_inputs(&paths, stack.layer_count());
    check_output(&a.out, &inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    write_composed(&stack, &a.out)
}

fn serve(a: ServeArgs) -> Result<()> {
    let max_sessions = a.max_sessions.try_into().map_err(|_| CliError::invalid("--max-sessions must be at least 1"))?;
    if let Some(dir) = &a.static_dir {
        if !dir.is_dir() {
            return Err(CliError::io(dir, "not a directory"));
        }
    }
    let config = ServiceConfig { max_sessions, max_side: a.max_side, static_dir: a.static_dir };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    runtime
        .block_on(ukiyo_service::serve(a.port, config))
        .map_err(|e| CliError::Io(format!("port {}: {e}", a.port)))
}
