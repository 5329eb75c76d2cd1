//! Embedded SQLite store: analysis runs, markers, devices, and the
//! non-geotagged images the markers link to.
//!
//! A run's rows are written in one transaction together with its end time,
//! so readers never see a partial run.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use geoexif_core::correlate::within_slot;
use geoexif_core::{FilterSpec, GeoPoint, MarkerView, SlotCounts, SlotHours, VerificationFinding};
use rusqlite::{params, Connection, OpenFlags, OptionalExtension, Row};
use serde::{Deserialize, Serialize};

pub const STORE_FILE: &str = "geoexif.sqlite";
const DATETIME_FMT: &str = "%Y-%m-%d %H:%M:%S";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("sqlite: {0}")]
    Sqlite(#[from] rusqlite::Error),
    #[error("corrupt stored value: {0}")]
    Corrupt(String),
    #[error("no asset with id {0}")]
    NotFound(i64),
}

pub type Result<T> = std::result::Result<T, StoreError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub id: String,
    pub start_time: DateTime<Utc>,
    pub end_time: Option<DateTime<Utc>>,
    pub files_scanned: u64,
    pub images_found: u64,
    pub geotagged_count: u64,
    /// Files that could not be read.
    pub unreadable: u64,
    pub root: String,
    pub workspace: String,
}

/// Columns shared by geotagged and non-geotagged images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetRow {
    pub id: i64,
    pub name: String,
    pub path: String,
    pub hash: String,
    /// Detected image kind, stored in the `type` column.
    pub kind: String,
    pub thumb_name: Option<String>,
    pub make: String,
    pub model: String,
    pub fake_id: String,
    pub datetime: Option<NaiveDateTime>,
    pub gps_datetime: Option<NaiveDateTime>,
    pub address: Option<String>,
    pub metadata: BTreeMap<String, String>,
    pub findings: Vec<VerificationFinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerRow {
    #[serde(flatten)]
    pub asset: AssetRow,
    pub lat: f64,
    pub lng: f64,
    pub altitude_m: Option<f64>,
    /// Rounded-coordinate bucket, `lat_e6:lng_e6`.
    pub bucket: String,
    pub multiples: u32,
    pub reference: bool,
    pub color: u32,
    pub ordre: u32,
    pub nb_fake_id: u32,
    pub links: SlotCounts,
}

impl MarkerRow {
    pub fn position(&self) -> GeoPoint {
        GeoPoint::new(self.lat, self.lng).expect("stored positions are validated on insert")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceRow {
    pub fake_id: String,
    pub make: String,
    pub model: String,
    pub ordre: u32,
    pub color: u32,
    pub nb_fake_id: u32,
}

/// A stored image of either class.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredAsset {
    Marker(MarkerRow),
    Image(AssetRow),
}

impl StoredAsset {
    pub fn asset(&self) -> &AssetRow {
        match self {
            StoredAsset::Marker(m) => &m.asset,
            StoredAsset::Image(a) => a,
        }
    }
}

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS analysis (
    id TEXT PRIMARY KEY,
    start_time TEXT NOT NULL,
    end_time TEXT,
    files_scanned INTEGER NOT NULL DEFAULT 0,
    images_found INTEGER NOT NULL DEFAULT 0,
    geotagged_count INTEGER NOT NULL DEFAULT 0,
    unreadable INTEGER NOT NULL DEFAULT 0,
    root TEXT NOT NULL,
    workspace TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS markers (
    run_id TEXT NOT NULL REFERENCES analysis(id),
    id INTEGER NOT NULL,
    name TEXT NOT NULL,
    path TEXT NOT NULL,
    hash TEXT NOT NULL,
    type TEXT NOT NULL,
    thumb_name TEXT,
    make TEXT NOT NULL,
    model TEXT NOT NULL,
    fake_id TEXT NOT NULL,
    datetime TEXT,
    gps_datetime TEXT,
    address TEXT,
    metadata TEXT NOT NULL,
    findings TEXT NOT NULL,
    lat REAL NOT NULL,
    lng REAL NOT NULL,
    altitude REAL,
    bucket TEXT NOT NULL,
    multiples INTEGER NOT NULL,
    reference INTEGER NOT NULL,
    color INTEGER NOT NULL,
    ordre INTEGER NOT NULL,
    nb_fake_id INTEGER NOT NULL,
    non_geotag_h1 INTEGER NOT NULL,
    non_geotag_h2 INTEGER NOT NULL,
    non_geotag_h3 INTEGER NOT NULL,
    non_geotag_h4 INTEGER NOT NULL,
    non_geotag_h5 INTEGER NOT NULL,
    non_geotag_h12 INTEGER NOT NULL,
    non_geotag_h24 INTEGER NOT NULL,
    PRIMARY KEY (run_id, id)
);
CREATE INDEX IF NOT EXISTS markers_bucket ON markers(run_id, bucket);
CREATE TABLE IF NOT EXISTS images (
    run_id TEXT NOT NULL REFERENCES analysis(id),
    id INTEGER NOT NULL,
    name TEXT NOT NULL,
    path TEXT NOT NULL,
    hash TEXT NOT NULL,
    type TEXT NOT NULL,
    thumb_name TEXT,
    make TEXT NOT NULL,
    model TEXT NOT NULL,
    fake_id TEXT NOT NULL,
    datetime TEXT,
    gps_datetime TEXT,
    address TEXT,
    metadata TEXT NOT NULL,
    findings TEXT NOT NULL,
    PRIMARY KEY (run_id, id)
);
CREATE INDEX IF NOT EXISTS images_device ON images(run_id, fake_id);
CREATE TABLE IF NOT EXISTS devices (
    run_id TEXT NOT NULL REFERENCES analysis(id),
    fake_id TEXT NOT NULL,
    make TEXT NOT NULL,
    model TEXT NOT NULL,
    ordre INTEGER NOT NULL,
    color INTEGER NOT NULL,
    nb_fake_id INTEGER NOT NULL,
    PRIMARY KEY (run_id, fake_id)
);
";

const ASSET_COLS: &str =
    "id, name, path, hash, type, thumb_name, make, model, fake_id, datetime, gps_datetime, address, metadata, findings";
const MARKER_COLS: &str = "lat, lng, altitude, bucket, multiples, reference, color, ordre, nb_fake_id, \
     non_geotag_h1, non_geotag_h2, non_geotag_h3, non_geotag_h4, non_geotag_h5, non_geotag_h12, non_geotag_h24";

fn fmt_dt(t: Option<NaiveDateTime>) -> Option<String> {
    t.map(|t| t.format(DATETIME_FMT).to_string())
}

fn parse_dt(s: Option<String>) -> Result<Option<NaiveDateTime>> {
    s.map(|s| NaiveDateTime::parse_from_str(&s, DATETIME_FMT).map_err(|e| StoreError::Corrupt(format!("{s:?}: {e}"))))
        .transpose()
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn from_json<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| StoreError::Corrupt(e.to_string()))
}

fn asset_from(row: &Row<'_>) -> Result<AssetRow> {
    Ok(AssetRow {
        id: row.get("id")?,
        name: row.get("name")?,
        path: row.get("path")?,
        hash: row.get("hash")?,
        kind: row.get("type")?,
        thumb_name: row.get("thumb_name")?,
        make: row.get("make")?,
        model: row.get("model")?,
        fake_id: row.get("fake_id")?,
        datetime: parse_dt(row.get("datetime")?)?,
        gps_datetime: parse_dt(row.get("gps_datetime")?)?,
        address: row.get("address")?,
        metadata: from_json(&row.get::<_, String>("metadata")?)?,
        findings: from_json(&row.get::<_, String>("findings")?)?,
    })
}

fn marker_from(row: &Row<'_>) -> Result<MarkerRow> {
    let mut links = SlotCounts::default();
    for (i, h) in SlotHours::all().enumerate() {
        links.0[i] = row.get(format!("non_geotag_h{}", h.hours()).as_str())?;
    }
    Ok(MarkerRow {
        asset: asset_from(row)?,
        lat: row.get("lat")?,
        lng: row.get("lng")?,
        altitude_m: row.get("altitude")?,
        bucket: row.get("bucket")?,
        multiples: row.get("multiples")?,
        reference: row.get("reference")?,
        color: row.get("color")?,
        ordre: row.get("ordre")?,
        nb_fake_id: row.get("nb_fake_id")?,
        links,
    })
}

fn analysis_from(row: &Row<'_>) -> Result<AnalysisRow> {
    let ts = |s: String| {
        DateTime::parse_from_rfc3339(&s).map(|t| t.with_timezone(&Utc)).map_err(|e| StoreError::Corrupt(e.to_string()))
    };
    Ok(AnalysisRow {
        id: row.get("id")?,
        start_time: ts(row.get("start_time")?)?,
        end_time: row.get::<_, Option<String>>("end_time")?.map(ts).transpose()?,
        files_scanned: row.get("files_scanned")?,
        images_found: row.get("images_found")?,
        geotagged_count: row.get("geotagged_count")?,
        unreadable: row.get("unreadable")?,
        root: row.get("root")?,
        workspace: row.get("workspace")?,
    })
}

fn rfc3339(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::Micros, true)
}

pub struct Store {
    conn: Connection,
}

impl Store {
    /// Open for writing, creating the schema when needed.
    pub fn open(path: &Path) -> Result<Store> {
        let conn = Connection::open(path)?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        conn.execute_batch(SCHEMA)?;
        Ok(Store { conn })
    }

    pub fn open_read_only(path: &Path) -> Result<Store> {
        let conn = Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX)?;
        Ok(Store { conn })
    }

    /// Record a run start. The row stays unfinished until [`Store::commit_run`].
    pub fn begin_run(&self, run: &AnalysisRow) -> Result<()> {
        self.conn.execute(
            "INSERT INTO analysis (id, start_time, end_time, root, workspace) VALUES (?1, ?2, NULL, ?3, ?4)",
            params![run.id, rfc3339(run.start_time), run.root, run.workspace],
        )?;
        Ok(())
    }

    /// Insert every row of a run and set its counters and end time, atomically.
    pub fn commit_run(
        &mut self,
        run: &AnalysisRow,
        markers: &[MarkerRow],
        images: &[AssetRow],
        devices: &[DeviceRow],
    ) -> Result<()> {
        let end = run.end_time.ok_or_else(|| StoreError::Corrupt("commit without end time".into()))?;
        let tx = self.conn.transaction()?;
        {
            let asset_params = |a: &AssetRow| {
                (
                    a.id,
                    a.name.clone(),
                    a.path.clone(),
                    a.hash.clone(),
                    a.kind.clone(),
                    a.thumb_name.clone(),
                    a.make.clone(),
                    a.model.clone(),
                    a.fake_id.clone(),
                    fmt_dt(a.datetime),
                    fmt_dt(a.gps_datetime),
                    a.address.clone(),
                    json(&a.metadata),
                    json(&a.findings),
                )
            };
            let mut ins = tx.prepare(&format!(
                "INSERT INTO markers (run_id, {ASSET_COLS}, {MARKER_COLS}) VALUES ({})",
                (1..=31).map(|i| format!("?{i}")).collect::<Vec<_>>().join(",")
            ))?;
            for m in markers {
                GeoPoint::new(m.lat, m.lng).map_err(|e| StoreError::Corrupt(format!("marker {}: {e}", m.asset.id)))?;
                let a = asset_params(&m.asset);
                let l = m.links.0;
                ins.execute(params![
                    run.id, a.0, a.1, a.2, a.3, a.4, a.5, a.6, a.7, a.8, a.9, a.10, a.11, a.12, a.13, m.lat, m.lng,
                    m.altitude_m, m.bucket, m.multiples, m.reference, m.color, m.ordre, m.nb_fake_id, l[0], l[1], l[2],
                    l[3], l[4], l[5], l[6]
                ])?;
            }
            let mut ins = tx.prepare(&format!(
                "INSERT INTO images (run_id, {ASSET_COLS}) VALUES ({})",
                (1..=15).map(|i| format!("?{i}")).collect::<Vec<_>>().join(",")
            ))?;
            for img in images {
                let a = asset_params(img);
                ins.execute(params![run.id, a.0, a.1, a.2, a.3, a.4, a.5, a.6, a.7, a.8, a.9, a.10, a.11, a.12, a.13])?;
            }
            let mut ins = tx.prepare(
                "INSERT INTO devices (run_id, fake_id, make, model, ordre, color, nb_fake_id) VALUES (?1,?2,?3,?4,?5,?6,?7)",
            )?;
            for d in devices {
                ins.execute(params![run.id, d.fake_id, d.make, d.model, d.ordre, d.color, d.nb_fake_id])?;
            }
            let n = tx.execute(
                "UPDATE analysis SET end_time = ?2, files_scanned = ?3, images_found = ?4, geotagged_count = ?5, \
                 unreadable = ?6 WHERE id = ?1",
                params![run.id, rfc3339(end), run.files_scanned, run.images_found, run.geotagged_count, run.unreadable],
            )?;
            if n != 1 {
                return Err(StoreError::Corrupt(format!("run {} was never started", run.id)));
            }
        }
        tx.commit()?;
        Ok(())
    }

    pub fn runs(&self) -> Result<Vec<AnalysisRow>> {
        let mut st = self.conn.prepare("SELECT * FROM analysis ORDER BY rowid")?;
        let rows = st.query_and_then([], analysis_from)?.collect();
        rows
    }

    pub fn run(&self, id: &str) -> Result<Option<AnalysisRow>> {
        let mut st = self.conn.prepare("SELECT * FROM analysis WHERE id = ?1")?;
        let mut rows = st.query_and_then([id], analysis_from)?;
        rows.next().transpose()
    }

    /// Most recently started run that finished.
    pub fn latest_finished_run(&self) -> Result<Option<AnalysisRow>> {
        let mut st = self.conn.prepare("SELECT * FROM analysis WHERE end_time IS NOT NULL ORDER BY rowid DESC LIMIT 1")?;
        let mut rows = st.query_and_then([], analysis_from)?;
        rows.next().transpose()
    }

    fn markers_where(&self, run: &str, clause: &str, extra: Option<i64>) -> Result<Vec<MarkerRow>> {
        let sql = format!("SELECT * FROM markers WHERE run_id = ?1 {clause} ORDER BY id");
        let mut st = self.conn.prepare(&sql)?;
        let rows = match extra {
            Some(x) => st.query_and_then(params![run, x], marker_from)?.collect(),
            None => st.query_and_then(params![run], marker_from)?.collect(),
        };
        rows
    }

    /// All markers of a run, grouped or not, by id.
    pub fn markers(&self, run: &str) -> Result<Vec<MarkerRow>> {
        self.markers_where(run, "", None)
    }

    pub fn marker_count(&self, run: &str) -> Result<u64> {
        Ok(self.conn.query_row("SELECT COUNT(*) FROM markers WHERE run_id = ?1", [run], |r| r.get(0))?)
    }

    /// Non-geotagged images of a run, by id.
    pub fn images(&self, run: &str) -> Result<Vec<AssetRow>> {
        let mut st = self.conn.prepare("SELECT * FROM images WHERE run_id = ?1 ORDER BY id")?;
        let rows = st.query_and_then([run], asset_from)?.collect();
        rows
    }

    pub fn marker(&self, run: &str, id: i64) -> Result<Option<MarkerRow>> {
        Ok(self.markers_where(run, "AND id = ?2", Some(id))?.pop())
    }

    pub fn asset(&self, run: &str, id: i64) -> Result<Option<StoredAsset>> {
        if let Some(m) = self.marker(run, id)? {
            return Ok(Some(StoredAsset::Marker(m)));
        }
        let mut st = self.conn.prepare("SELECT * FROM images WHERE run_id = ?1 AND id = ?2")?;
        let mut rows = st.query_and_then(params![run, id], asset_from)?;
        Ok(rows.next().transpose()?.map(StoredAsset::Image))
    }

    /// Reference markers satisfying every clause of `filter`,
    /// ordered by device rank, then capture time (undated last), then id.
    pub fn query_markers(&self, run: &str, filter: &FilterSpec) -> Result<Vec<MarkerRow>> {
        let mut rows: Vec<MarkerRow> = self
            .markers_where(run, "AND reference = 1", None)?
            .into_iter()
            .filter(|m| {
                filter.matches(&MarkerView {
                    fake_id: &m.asset.fake_id,
                    position: m.position(),
                    datetime: m.asset.datetime,
                    links: &m.links,
                })
            })
            .collect();
        rows.sort_by(|a, b| {
            a.ordre
                .cmp(&b.ordre)
                .then_with(|| match (a.asset.datetime, b.asset.datetime) {
                    (Some(x), Some(y)) => x.cmp(&y),
                    (Some(_), None) => std::cmp::Ordering::Less,
                    (None, Some(_)) => std::cmp::Ordering::Greater,
                    (None, None) => std::cmp::Ordering::Equal,
                })
                .then_with(|| a.asset.id.cmp(&b.asset.id))
        });
        Ok(rows)
    }

    /// Same-device non-geotagged images within ±`slot` hours of the marker, by capture time then id.
    pub fn linked_non_geotagged(&self, run: &str, marker_id: i64, slot: SlotHours) -> Result<Vec<AssetRow>> {
        let marker = self.marker(run, marker_id)?.ok_or(StoreError::NotFound(marker_id))?;
        let Some(t) = marker.asset.datetime else { return Ok(Vec::new()) };
        let mut st = self.conn.prepare("SELECT * FROM images WHERE run_id = ?1 AND fake_id = ?2")?;
        let mut out: Vec<AssetRow> = st
            .query_and_then(params![run, marker.asset.fake_id], asset_from)?
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|a| a.datetime.is_some_and(|u| within_slot(t, u, slot)))
            .collect();
        out.sort_by(|a, b| a.datetime.cmp(&b.datetime).then(a.id.cmp(&b.id)));
        Ok(out)
    }

    /// All markers sharing the marker's rounded coordinate, reference first.
    pub fn same_location_group(&self, run: &str, marker_id: i64) -> Result<Vec<MarkerRow>> {
        let marker = self.marker(run, marker_id)?.ok_or(StoreError::NotFound(marker_id))?;
        let mut st = self.conn.prepare("SELECT * FROM markers WHERE run_id = ?1 AND bucket = ?2")?;
        let mut rows: Vec<MarkerRow> =
            st.query_and_then(params![run, marker.bucket], marker_from)?.collect::<Result<_>>()?;
        rows.sort_by(|a, b| b.reference.cmp(&a.reference).then(a.asset.path.cmp(&b.asset.path)));
        Ok(rows)
    }

    /// Devices of a run by rank.
    pub fn devices(&self, run: &str) -> Result<Vec<DeviceRow>> {
        let mut st = self.conn.prepare("SELECT * FROM devices WHERE run_id = ?1 ORDER BY ordre")?;
        let rows = st
            .query_map([run], |r| {
                Ok(DeviceRow {
                    fake_id: r.get("fake_id")?,
                    make: r.get("make")?,
                    model: r.get("model")?,
                    ordre: r.get("ordre")?,
                    color: r.get("color")?,
                    nb_fake_id: r.get("nb_fake_id")?,
                })
            })?
            .collect::<rusqlite::Result<_>>()?;
        Ok(rows)
    }

    pub fn device(&self, run: &str, fake_id: &str) -> Result<Option<DeviceRow>> {
        Ok(self.devices(run)?.into_iter().find(|d| d.fake_id == fake_id))
    }

    /// True when the database file holds no runs at all.
    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.conn.query_row("SELECT COUNT(*) FROM analysis", [], |r| r.get::<_, i64>(0))? == 0)
    }

    pub fn contains(&self, run: &str, id: i64) -> Result<bool> {
        Ok(self
            .conn
            .query_row(
                "SELECT 1 FROM markers WHERE run_id = ?1 AND id = ?2 \
                 UNION SELECT 1 FROM images WHERE run_id = ?1 AND id = ?2",
                params![run, id],
                |_| Ok(()),
            )
            .optional()?
            .is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use geoexif_core::{FindingCode, ZoneFilter};

    fn t(h: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2013, 8, 11).unwrap().and_hms_opt(h, 0, 0).unwrap()
    }

    fn asset(id: i64, fake_id: &str, datetime: Option<NaiveDateTime>) -> AssetRow {
        AssetRow {
            id,
            name: format!("f{id}.jpg"),
            path: format!("/ev/f{id:03}.jpg"),
            hash: "00".into(),
            kind: "JPEG".into(),
            thumb_name: None,
            make: "M".into(),
            model: "X".into(),
            fake_id: fake_id.into(),
            datetime,
            gps_datetime: None,
            address: None,
            metadata: BTreeMap::from([("IFD0.Make".into(), "M".into())]),
            findings: vec![VerificationFinding::info(FindingCode::NonGpsPositioning, "GPSProcessingMethod = \"WLAN\"")],
        }
    }

    fn marker(id: i64, fake_id: &str, h: u32, lat: f64, reference: bool, ordre: u32, links: [u32; 7]) -> MarkerRow {
        MarkerRow {
            asset: asset(id, fake_id, Some(t(h))),
            lat,
            lng: 5.0,
            altitude_m: Some(12.0),
            bucket: format!("{}:5000000", (lat * 1e6).round() as i64),
            multiples: 0,
            reference,
            color: ordre - 1,
            ordre,
            nb_fake_id: 1,
            links: SlotCounts(links),
        }
    }

    fn run(id: &str) -> AnalysisRow {
        AnalysisRow {
            id: id.into(),
            start_time: Utc::now(),
            end_time: None,
            files_scanned: 0,
            images_found: 0,
            geotagged_count: 0,
            unreadable: 0,
            root: "/ev".into(),
            workspace: "/ws".into(),
        }
    }

    fn finished(id: &str) -> AnalysisRow {
        AnalysisRow { end_time: Some(Utc::now()), files_scanned: 5, images_found: 4, geotagged_count: 3, ..run(id) }
    }

    fn populated() -> (tempfile::TempDir, Store) {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(&dir.path().join(STORE_FILE)).unwrap();
        store.begin_run(&run("r1")).unwrap();
        let markers = vec![
            marker(1, "A", 10, 43.0, true, 1, [1, 1, 1, 1, 1, 1, 1]),
            marker(2, "A", 12, 43.1, true, 1, [0, 1, 1, 1, 1, 1, 1]),
            marker(3, "B", 9, 43.0, false, 2, [0; 7]),
            marker(4, "B", 8, 44.0, true, 2, [0; 7]),
        ];
        let images = vec![asset(5, "A", Some(t(11))), asset(6, "A", None), asset(7, "B", Some(t(8)))];
        let devices = vec![
            DeviceRow { fake_id: "A".into(), make: "M".into(), model: "X".into(), ordre: 1, color: 0, nb_fake_id: 4 },
            DeviceRow { fake_id: "B".into(), make: "M".into(), model: "X".into(), ordre: 2, color: 1, nb_fake_id: 3 },
        ];
        store.commit_run(&finished("r1"), &markers, &images, &devices).unwrap();
        (dir, store)
    }

    #[test]
    fn unfinished_runs_are_invisible() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(&dir.path().join(STORE_FILE)).unwrap();
        assert!(store.is_empty().unwrap());
        store.begin_run(&run("r0")).unwrap();
        assert_eq!(store.latest_finished_run().unwrap(), None);
        assert_eq!(store.runs().unwrap()[0].end_time, None);
    }

    #[test]
    fn round_trip_after_reopen() {
        let (dir, store) = populated();
        let before = store.markers("r1").unwrap();
        drop(store);
        let store = Store::open_read_only(&dir.path().join(STORE_FILE)).unwrap();
        assert_eq!(store.markers("r1").unwrap(), before);
        assert_eq!(store.marker_count("r1").unwrap(), 4);
        let run = store.latest_finished_run().unwrap().unwrap();
        assert_eq!((run.files_scanned, run.images_found, run.geotagged_count), (5, 4, 3));
        assert_eq!(before[0].asset.findings[0].code, FindingCode::NonGpsPositioning);
    }

    #[test]
    fn query_returns_reference_rows_in_rank_order() {
        let (_d, store) = populated();
        let ids = |f: &FilterSpec| store.query_markers("r1", f).unwrap().iter().map(|m| m.asset.id).collect::<Vec<_>>();
        assert_eq!(ids(&FilterSpec::all()), vec![1, 2, 4]);
        assert_eq!(ids(&FilterSpec::all().with_device("B")), vec![4]);
        assert_eq!(ids(&FilterSpec::all().with_slot(SlotHours::new(1).unwrap())), vec![1]);
        let zone = ZoneFilter::new(GeoPoint::new(43.0, 5.0).unwrap(), 5.0).unwrap();
        assert_eq!(ids(&FilterSpec::all().with_zone(zone)), vec![1]);
    }

    #[test]
    fn linked_and_grouped() {
        let (_d, store) = populated();
        let one = SlotHours::new(1).unwrap();
        let ids = |v: Vec<AssetRow>| v.into_iter().map(|a| a.id).collect::<Vec<_>>();
        assert_eq!(ids(store.linked_non_geotagged("r1", 1, one).unwrap()), vec![5]);
        assert_eq!(ids(store.linked_non_geotagged("r1", 4, one).unwrap()), vec![7]);
        assert!(matches!(store.linked_non_geotagged("r1", 99, one), Err(StoreError::NotFound(99))));
        let group: Vec<i64> = store.same_location_group("r1", 3).unwrap().iter().map(|m| m.asset.id).collect();
        assert_eq!(group, vec![1, 3]);
        assert!(matches!(store.asset("r1", 6).unwrap(), Some(StoredAsset::Image(_))));
        assert!(store.asset("r1", 42).unwrap().is_none());
        assert!(store.contains("r1", 7).unwrap());
        assert_eq!(store.devices("r1").unwrap().len(), 2);
    }

    #[test]
    fn empty_run_is_fine() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(&dir.path().join(STORE_FILE)).unwrap();
        store.begin_run(&run("e")).unwrap();
        store.commit_run(&finished("e"), &[], &[], &[]).unwrap();
        assert!(store.query_markers("e", &FilterSpec::all()).unwrap().is_empty());
    }
}
