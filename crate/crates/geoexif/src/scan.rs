//! Read-only evidence sweep: detect, parse, fingerprint, classify, thumbnail,
//! verify, then correlate and persist one analysis run.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use chrono::Utc;
use geoexif_core::correlate::{classify, compute_timeslot_links, group_same_coordinates, rank_devices, LinkSubject};
use geoexif_core::verify::{verify, Elevation, VerificationInput};
use geoexif_core::{
    build_fingerprint, detect_image_kind, parse_exif, BucketKey, Classification, FindingCode, SlotCounts,
    VerificationFinding, VerifyConfig, SLOT_HOURS,
};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::asset::ImageAsset;
use crate::geoservice::{GeoProviderConfig, GeoServiceError, GeoServices, CACHE_FILE};
use crate::store::{AnalysisRow, AssetRow, DeviceRow, MarkerRow, Store, StoreError, STORE_FILE};
use crate::thumb::{make_thumbnail, DEFAULT_MAX_PX};

pub const THUMB_DIR: &str = "thumbs";

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub root: PathBuf,
    pub workspace: PathBuf,
    pub thumbnail_max_px: u32,
    pub reverse_geocode: bool,
    pub altitude_check: bool,
    pub verify: VerifyConfig,
    pub geo: GeoProviderConfig,
}

impl ScanConfig {
    pub fn new(root: impl Into<PathBuf>, workspace: impl Into<PathBuf>) -> Self {
        ScanConfig {
            root: root.into(),
            workspace: workspace.into(),
            thumbnail_max_px: DEFAULT_MAX_PX,
            reverse_geocode: false,
            altitude_check: false,
            verify: VerifyConfig::default(),
            geo: GeoProviderConfig::default(),
        }
    }

    /// Link windows in hours; fixed.
    pub fn slot_hours(&self) -> &'static [u32; 7] {
        &SLOT_HOURS
    }

    pub fn store_path(&self) -> PathBuf {
        self.workspace.join(STORE_FILE)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScanError {
    #[error("evidence root {0} is not a readable directory")]
    Root(PathBuf),
    #[error("workspace {workspace} lies inside evidence root {root}")]
    WorkspaceInsideRoot { workspace: PathBuf, root: PathBuf },
    #[error("workspace: {0}")]
    Workspace(#[from] io::Error),
    #[error("store: {0}")]
    Store(#[from] StoreError),
    #[error("geo services: {0}")]
    GeoServices(#[from] GeoServiceError),
    #[error("thumbnail size must be positive")]
    ThumbnailSize,
}

/// Live counters, safe to read from another thread while a scan runs.
#[derive(Debug, Default)]
pub struct ScanProgress {
    pub files_scanned: AtomicU64,
    pub images_found: AtomicU64,
    pub geotagged: AtomicU64,
    pub unreadable: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProgressSnapshot {
    pub files_scanned: u64,
    pub images_found: u64,
    pub geotagged: u64,
    pub unreadable: u64,
}

impl ScanProgress {
    pub fn snapshot(&self) -> ProgressSnapshot {
        ProgressSnapshot {
            files_scanned: self.files_scanned.load(Ordering::Relaxed),
            images_found: self.images_found.load(Ordering::Relaxed),
            geotagged: self.geotagged.load(Ordering::Relaxed),
            unreadable: self.unreadable.load(Ordering::Relaxed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutcome {
    pub run: AnalysisRow,
    /// Geo lookups that missed the cache.
    pub provider_calls: u64,
    pub network_calls: u64,
}

/// Absolute, symlink-resolved form of `p`, even when its tail does not exist yet.
fn resolve(p: &Path) -> io::Result<PathBuf> {
    let abs = if p.is_absolute() { p.to_path_buf() } else { std::env::current_dir()?.join(p) };
    let mut existing = abs.as_path();
    let mut tail = Vec::new();
    while !existing.exists() {
        match (existing.parent(), existing.file_name()) {
            (Some(parent), Some(name)) => {
                tail.push(name.to_owned());
                existing = parent;
            }
            _ => break,
        }
    }
    let mut out = existing.canonicalize()?;
    for c in tail.iter().rev() {
        out.push(c);
    }
    // lexical cleanup of any `..` left in the non-existing tail
    let mut clean = PathBuf::new();
    for c in out.components() {
        match c {
            Component::ParentDir => {
                clean.pop();
            }
            Component::CurDir => {}
            other => clean.push(other),
        }
    }
    Ok(clean)
}

fn check_paths(config: &ScanConfig) -> Result<(PathBuf, PathBuf), ScanError> {
    if !config.root.is_dir() {
        return Err(ScanError::Root(config.root.clone()));
    }
    let root = config.root.canonicalize().map_err(|_| ScanError::Root(config.root.clone()))?;
    let workspace = resolve(&config.workspace)?;
    if workspace.starts_with(&root) {
        return Err(ScanError::WorkspaceInsideRoot { workspace, root });
    }
    Ok((root, workspace))
}

/// Run a full scan with geo services built from `config.geo`.
pub fn scan_tree(config: &ScanConfig, progress: &ScanProgress) -> Result<ScanOutcome, ScanError> {
    check_paths(config)?;
    fs::create_dir_all(&config.workspace)?;
    let mut geo = config.geo.clone();
    geo.cache_path.get_or_insert_with(|| config.workspace.join(CACHE_FILE));
    let services = GeoServices::from_config(&geo)?;
    let run = scan_tree_with(config, &services, progress)?;
    Ok(ScanOutcome { run, provider_calls: services.provider_calls(), network_calls: services.network_calls() })
}

/// Run a full scan against caller-supplied geo services.
pub fn scan_tree_with(
    config: &ScanConfig,
    services: &GeoServices,
    progress: &ScanProgress,
) -> Result<AnalysisRow, ScanError> {
    if config.thumbnail_max_px == 0 {
        return Err(ScanError::ThumbnailSize);
    }
    let (root, workspace) = check_paths(config)?;
    let thumbs = workspace.join(THUMB_DIR);
    fs::create_dir_all(&thumbs)?;
    let mut store = Store::open(&workspace.join(STORE_FILE))?;
    let mut run = AnalysisRow {
        id: uuid::Uuid::new_v4().to_string(),
        start_time: Utc::now(),
        end_time: None,
        files_scanned: 0,
        images_found: 0,
        geotagged_count: 0,
        unreadable: 0,
        root: root.to_string_lossy().into_owned(),
        workspace: workspace.to_string_lossy().into_owned(),
    };
    store.begin_run(&run)?;
    log::info!("run {} started on {}", run.id, root.display());

    let mut files = Vec::new();
    for entry in WalkDir::new(&root).follow_links(false).sort_by_file_name() {
        match entry {
            Ok(e) if e.file_type().is_file() => files.push(e.into_path()),
            Ok(_) => {}
            Err(e) => {
                progress.unreadable.fetch_add(1, Ordering::Relaxed);
                log::warn!("cannot walk {}: {e}", e.path().map_or_else(String::new, |p| p.display().to_string()));
            }
        }
    }

    let loaded: Vec<Option<ImageAsset>> = files
        .par_iter()
        .map(|path| {
            progress.files_scanned.fetch_add(1, Ordering::Relaxed);
            match load_asset(path, config, services, &thumbs) {
                Ok(asset) => {
                    if let Some(a) = &asset {
                        progress.images_found.fetch_add(1, Ordering::Relaxed);
                        if a.is_geotagged() {
                            progress.geotagged.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                    asset
                }
                Err(e) => {
                    progress.unreadable.fetch_add(1, Ordering::Relaxed);
                    log::warn!("skipping unreadable {}: {e}", path.display());
                    None
                }
            }
        })
        .collect();
    let mut assets: Vec<ImageAsset> = loaded.into_iter().flatten().collect();
    assets.sort_by_key(|a| a.path_string());

    let (markers, images, devices) = correlate(&mut assets);
    let snap = progress.snapshot();
    run.files_scanned = files.len() as u64;
    run.images_found = assets.len() as u64;
    run.geotagged_count = markers.len() as u64;
    run.unreadable = snap.unreadable;
    run.end_time = Some(Utc::now());
    store.commit_run(&run, &markers, &images, &devices)?;
    if let Err(e) = services.save() {
        log::warn!("geo cache not saved: {e}");
    }
    log::info!(
        "run {} finished: {} files, {} images, {} geotagged",
        run.id,
        run.files_scanned,
        run.images_found,
        run.geotagged_count
    );
    Ok(run)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Build the asset for one file, or `None` when it is not a JPEG/TIFF.
pub fn load_asset(
    path: &Path,
    config: &ScanConfig,
    services: &GeoServices,
    thumbs_dir: &Path,
) -> io::Result<Option<ImageAsset>> {
    let bytes = fs::read(path)?;
    let kind = detect_image_kind(&bytes);
    if !kind.carries_exif() {
        return Ok(None);
    }
    let content_hash = sha256_hex(&bytes);
    let exif = parse_exif(&bytes);
    let mut findings = Vec::new();
    if let Some(e) = &exif {
        for w in &e.warnings {
            findings.push(VerificationFinding::warning(FindingCode::MalformedMetadata, w.to_string()));
        }
    }
    let fingerprint = build_fingerprint(exif.as_ref());
    let position = match classify(exif.as_ref()) {
        Classification::Geotagged(p) => Some(p),
        Classification::NonGeotagged { malformed: Some(err) } => {
            findings.push(VerificationFinding::warning(FindingCode::MalformedMetadata, format!("GPS position: {err}")));
            None
        }
        Classification::NonGeotagged { malformed: None } => None,
    };

    let thumb_name = format!("{content_hash}_{}.jpg", config.thumbnail_max_px);
    let thumbnail = match make_thumbnail(&bytes, config.thumbnail_max_px) {
        Ok((jpeg, _)) => {
            let target = thumbs_dir.join(&thumb_name);
            if !target.exists() {
                let tmp = thumbs_dir.join(format!("{thumb_name}.{}.tmp", uuid::Uuid::new_v4()));
                fs::write(&tmp, jpeg)?;
                fs::rename(&tmp, &target)?;
            }
            Some(format!("{THUMB_DIR}/{thumb_name}"))
        }
        Err(e) => {
            findings.push(VerificationFinding::info(FindingCode::ThumbnailUnavailable, format!("pixel decoding failed: {e}")));
            None
        }
    };

    let address = position.filter(|_| config.reverse_geocode).and_then(|p| services.reverse_geocode(&p));
    let elevation = match position {
        Some(p) if config.altitude_check => services.elevation_m(&p).map_or(Elevation::Unavailable, Elevation::Known),
        _ => Elevation::NotRequested,
    };
    if let Some(e) = &exif {
        findings.extend(verify(&VerificationInput::from_exif(e, elevation), &config.verify));
    }

    Ok(Some(ImageAsset {
        name: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        path: path.to_path_buf(),
        content_hash,
        kind,
        exif_datetime: exif.as_ref().and_then(|e| e.capture_datetime()),
        gps_datetime: exif.as_ref().and_then(|e| e.gps_datetime()),
        altitude_m: position.and(exif.as_ref().and_then(|e| e.gps_altitude())),
        position,
        fingerprint,
        thumbnail,
        address,
        findings,
        exif,
    }))
}

fn subject(a: &ImageAsset) -> LinkSubject<'_> {
    LinkSubject { fake_id: &a.fingerprint.fake_id, datetime: a.exif_datetime }
}

fn asset_row(id: i64, a: &ImageAsset) -> AssetRow {
    AssetRow {
        id,
        name: a.name.clone(),
        path: a.path_string(),
        hash: a.content_hash.clone(),
        kind: a.kind.as_str().to_owned(),
        thumb_name: a.thumbnail.clone(),
        make: a.fingerprint.make.clone(),
        model: a.fingerprint.model.clone(),
        fake_id: a.fingerprint.fake_id.clone(),
        datetime: a.exif_datetime,
        gps_datetime: a.gps_datetime,
        address: a.address.clone(),
        metadata: a.metadata(),
        findings: a.findings.clone(),
    }
}

/// Group, link and rank path-sorted assets. Ids are 1-based positions in `assets`.
pub fn correlate(assets: &mut [ImageAsset]) -> (Vec<MarkerRow>, Vec<AssetRow>, Vec<DeviceRow>) {
    let ranks = rank_devices(assets.iter().map(|a| a.fingerprint.fake_id.as_str()));
    let mut device_rows = Vec::with_capacity(ranks.len());
    let mut by_id = BTreeMap::new();
    for r in &ranks {
        let first = assets.iter().find(|a| a.fingerprint.fake_id == r.fake_id).expect("ranked from these assets");
        device_rows.push(DeviceRow {
            fake_id: r.fake_id.clone(),
            make: first.fingerprint.make.clone(),
            model: first.fingerprint.model.clone(),
            ordre: r.ordre,
            color: r.color,
            nb_fake_id: r.nb_fake_id,
        });
        by_id.insert(r.fake_id.clone(), r.clone());
    }

    let geo_idx: Vec<usize> = (0..assets.len()).filter(|&i| assets[i].is_geotagged()).collect();
    let non_idx: Vec<usize> = (0..assets.len()).filter(|&i| !assets[i].is_geotagged()).collect();
    let links = {
        let g: Vec<LinkSubject<'_>> = geo_idx.iter().map(|&i| subject(&assets[i])).collect();
        let n: Vec<LinkSubject<'_>> = non_idx.iter().map(|&i| subject(&assets[i])).collect();
        compute_timeslot_links(&g, &n)
    };
    let groups = {
        let items: Vec<(String, geoexif_core::GeoPoint)> =
            geo_idx.iter().map(|&i| (assets[i].path_string(), assets[i].position.expect("geotagged"))).collect();
        group_same_coordinates(&items)
    };

    let mut markers = Vec::with_capacity(geo_idx.len());
    for ((&i, counts), group) in geo_idx.iter().zip(links).zip(groups) {
        let counts = counts.unwrap_or_else(|| {
            assets[i].findings.push(VerificationFinding::info(
                FindingCode::MissingTimestamp,
                "no DateTimeOriginal, CreateDate or DateTime; time-slot links not computed",
            ));
            SlotCounts::default()
        });
        let a = &assets[i];
        let p = a.position.expect("geotagged").rounded6();
        let rank = &by_id[&a.fingerprint.fake_id];
        markers.push(MarkerRow {
            asset: asset_row(i as i64 + 1, a),
            lat: p.latitude(),
            lng: p.longitude(),
            altitude_m: a.altitude_m,
            bucket: BucketKey::of(&p).to_string(),
            multiples: group.multiples,
            reference: group.reference,
            color: rank.color,
            ordre: rank.ordre,
            nb_fake_id: rank.nb_fake_id,
            links: counts,
        });
    }
    let images = non_idx.iter().map(|&i| asset_row(i as i64 + 1, &assets[i])).collect();
    (markers, images, device_rows)
}
