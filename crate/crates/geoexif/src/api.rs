//! Read-only HTTP endpoints as a plain function of (workspace, request target).

use std::fs;
use std::path::{Component, Path, PathBuf};

use chrono::Utc;
use serde::Serialize;
use serde_json::json;

use crate::feed;
use crate::query::{pairs, parse_filter, parse_slot, single, QueryError};
use crate::report::{build_report, render_html, render_json, report_slot, CAVEAT_LINKS};
use crate::scan::sha256_hex;
use crate::store::{AnalysisRow, Store, StoreError, StoredAsset, STORE_FILE};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub content_type: String,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl ApiResponse {
    fn new(status: u16, content_type: &str, body: impl Into<Vec<u8>>) -> Self {
        ApiResponse {
            status,
            content_type: content_type.into(),
            headers: vec![("Access-Control-Allow-Origin".into(), "*".into())],
            body: body.into(),
        }
    }

    fn json<T: Serialize>(status: u16, v: &T) -> Self {
        Self::new(status, "application/json", serde_json::to_vec(v).expect("response serializes"))
    }

    fn error(status: u16, message: impl Into<String>) -> Self {
        Self::json(status, &json!({ "error": message.into() }))
    }

    fn with_header(mut self, k: &str, v: impl Into<String>) -> Self {
        self.headers.push((k.into(), v.into()));
        self
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

impl From<QueryError> for ApiResponse {
    fn from(e: QueryError) -> Self {
        ApiResponse::error(400, e.to_string())
    }
}

impl From<StoreError> for ApiResponse {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(id) => ApiResponse::error(404, format!("no asset with id {id}")),
            other => {
                log::error!("store failure: {other}");
                ApiResponse::error(500, other.to_string())
            }
        }
    }
}

type Handled = Result<ApiResponse, ApiResponse>;

/// Serves one workspace; each request opens its own read-only store connection.
#[derive(Debug, Clone)]
pub struct Api {
    workspace: PathBuf,
    ui_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct LinkedDescriptor {
    id: i64,
    name: String,
    path: String,
    datetime: Option<String>,
    thumb: Option<String>,
    probable_only: bool,
    caveat: &'static str,
}

#[derive(Serialize)]
struct Meta<'a> {
    geotagged: bool,
    #[serde(flatten)]
    asset: &'a crate::store::AssetRow,
    #[serde(skip_serializing_if = "Option::is_none")]
    marker: Option<MarkerMeta>,
    image_url: String,
    thumb_url: Option<String>,
}

#[derive(Serialize)]
struct MarkerMeta {
    lat: f64,
    lng: f64,
    altitude_m: Option<f64>,
    multiples: u32,
    reference: bool,
    ordre: u32,
    color: u32,
    nb_fake_id: u32,
    non_geotag: [u32; 7],
}

fn id_param(s: &str) -> Result<i64, ApiResponse> {
    s.parse::<i64>().map_err(|_| ApiResponse::error(404, format!("no asset with id {s:?}")))
}

impl Api {
    pub fn new(workspace: impl Into<PathBuf>) -> Self {
        Api { workspace: workspace.into(), ui_dir: None }
    }

    pub fn with_ui(mut self, dir: impl Into<PathBuf>) -> Self {
        self.ui_dir = Some(dir.into());
        self
    }

    pub fn workspace(&self) -> &Path {
        &self.workspace
    }

    fn open(&self) -> Result<(Store, AnalysisRow), ApiResponse> {
        let path = self.workspace.join(STORE_FILE);
        let no_run = || ApiResponse::error(409, "no finished scan in this workspace; run `geoexif scan` first");
        if !path.exists() {
            return Err(no_run());
        }
        let store = Store::open_read_only(&path)?;
        let run = store.latest_finished_run()?.ok_or_else(no_run)?;
        Ok((store, run))
    }

    /// Handle `GET path?query`.
    pub fn get(&self, target: &str) -> ApiResponse {
        let (path, query) = target.split_once('?').unwrap_or((target, ""));
        let segs: Vec<&str> = path.trim_matches('/').split('/').filter(|s| !s.is_empty()).collect();
        let res = match segs.as_slice() {
            ["markers.xml"] => self.markers(query, true),
            ["markers.json"] => self.markers(query, false),
            ["devices"] => self.devices(),
            ["status"] => self.status(),
            ["thumb", id] => self.thumb(id),
            ["image", id] => self.image(id),
            ["meta", id] => self.meta(id),
            ["linked", id] => self.linked(id, query),
            ["group", id] => self.group(id),
            ["report"] => self.report(query),
            _ => self.static_file(&segs),
        };
        res.unwrap_or_else(|e| e)
    }

    fn markers(&self, query: &str, xml: bool) -> Handled {
        let filter = parse_filter(query)?;
        let (store, run) = self.open()?;
        let entries = feed::entries(&store.query_markers(&run.id, &filter)?);
        Ok(if xml {
            ApiResponse::new(200, "application/xml; charset=utf-8", feed::to_xml(&entries))
        } else {
            ApiResponse::new(200, "application/json", feed::to_json(&entries))
        })
    }

    fn devices(&self) -> Handled {
        let (store, run) = self.open()?;
        Ok(ApiResponse::json(200, &store.devices(&run.id)?))
    }

    fn status(&self) -> Handled {
        let (_, run) = self.open()?;
        Ok(ApiResponse::json(200, &run))
    }

    fn asset(&self, id: &str) -> Result<(Store, AnalysisRow, StoredAsset), ApiResponse> {
        let id = id_param(id)?;
        let (store, run) = self.open()?;
        let asset = store.asset(&run.id, id)?.ok_or(StoreError::NotFound(id))?;
        Ok((store, run, asset))
    }

    fn thumb(&self, id: &str) -> Handled {
        let (_, _, asset) = self.asset(id)?;
        let a = asset.asset();
        let rel = a.thumb_name.as_deref().ok_or_else(|| ApiResponse::error(404, "no thumbnail for this image"))?;
        let bytes = fs::read(self.workspace.join(rel)).map_err(|e| ApiResponse::error(404, format!("thumbnail: {e}")))?;
        Ok(ApiResponse::new(200, "image/jpeg", bytes))
    }

    fn image(&self, id: &str) -> Handled {
        let (_, _, asset) = self.asset(id)?;
        let a = asset.asset();
        match fs::read(&a.path) {
            Ok(bytes) => {
                let kind = geoexif_core::detect_image_kind(&bytes);
                let current = sha256_hex(&bytes);
                Ok(ApiResponse::new(200, kind.mime_type(), bytes)
                    .with_header("X-Content-SHA256", current.clone())
                    .with_header("X-Content-Matches-Scan", (current == a.hash).to_string())
                    .with_header("Link", format!("</meta/{}>; rel=\"describedby\"", a.id)))
            }
            Err(e) => Err(ApiResponse::json(
                410,
                &json!({ "error": format!("original file is gone: {e}"), "path": a.path, "last_known_sha256": a.hash }),
            )),
        }
    }

    fn meta(&self, id: &str) -> Handled {
        let (_, _, asset) = self.asset(id)?;
        let (a, marker) = match &asset {
            StoredAsset::Marker(m) => (
                &m.asset,
                Some(MarkerMeta {
                    lat: m.lat,
                    lng: m.lng,
                    altitude_m: m.altitude_m,
                    multiples: m.multiples,
                    reference: m.reference,
                    ordre: m.ordre,
                    color: m.color,
                    nb_fake_id: m.nb_fake_id,
                    non_geotag: m.links.0,
                }),
            ),
            StoredAsset::Image(a) => (a, None),
        };
        let meta = Meta {
            geotagged: marker.is_some(),
            asset: a,
            marker,
            image_url: format!("/image/{}", a.id),
            thumb_url: a.thumb_name.as_ref().map(|_| format!("/thumb/{}", a.id)),
        };
        Ok(ApiResponse::json(200, &meta))
    }

    fn linked(&self, id: &str, query: &str) -> Handled {
        let p = pairs(query);
        let slot = match single(&p, "slot")? {
            Some(s) => parse_slot(s)?,
            None => return Err(ApiResponse::error(400, "slot is required (1, 2, 3, 4, 5, 12 or 24)")),
        };
        let id = id_param(id)?;
        let (store, run) = self.open()?;
        if store.marker(&run.id, id)?.is_none() {
            return Err(ApiResponse::error(404, format!("no marker with id {id}")));
        }
        let list: Vec<LinkedDescriptor> = store
            .linked_non_geotagged(&run.id, id, slot)?
            .into_iter()
            .map(|a| LinkedDescriptor {
                id: a.id,
                thumb: a.thumb_name.as_ref().map(|_| format!("/thumb/{}", a.id)),
                name: a.name,
                path: a.path,
                datetime: a.datetime.map(|t| t.format("%Y-%m-%dT%H:%M:%S").to_string()),
                probable_only: true,
                caveat: CAVEAT_LINKS,
            })
            .collect();
        Ok(ApiResponse::json(200, &list))
    }

    fn group(&self, id: &str) -> Handled {
        let id = id_param(id)?;
        let (store, run) = self.open()?;
        let rows = store.same_location_group(&run.id, id)?;
        Ok(ApiResponse::json(200, &feed::entries(&rows)))
    }

    fn report(&self, query: &str) -> Handled {
        let filter = parse_filter(query)?;
        let p = pairs(query);
        let format = single(&p, "format")?.unwrap_or("html");
        if !matches!(format, "html" | "json") {
            return Err(ApiResponse::error(400, format!("format must be html or json, got {format:?}")));
        }
        let (store, run) = self.open()?;
        let doc = build_report(&store, &run.id, &self.workspace, &filter, report_slot(&filter), Utc::now())?;
        Ok(match format {
            "json" => ApiResponse::new(200, "application/json", render_json(&doc)),
            _ => ApiResponse::new(200, "text/html; charset=utf-8", render_html(&doc)),
        })
    }

    fn static_file(&self, segs: &[&str]) -> Handled {
        let Some(ui) = &self.ui_dir else {
            return if segs.is_empty() {
                Ok(ApiResponse::new(200, "text/plain; charset=utf-8", INDEX))
            } else {
                Err(ApiResponse::error(404, "no such endpoint"))
            };
        };
        let rel: PathBuf = if segs.is_empty() { PathBuf::from("index.html") } else { segs.iter().collect() };
        if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
            return Err(ApiResponse::error(404, "no such file"));
        }
        let path = ui.join(&rel);
        let bytes = fs::read(&path).map_err(|_| ApiResponse::error(404, "no such file"))?;
        let ct = match path.extension().and_then(|e| e.to_str()) {
            Some("html") => "text/html; charset=utf-8",
            Some("js" | "mjs") => "text/javascript",
            Some("css") => "text/css",
            Some("json") => "application/json",
            Some("svg") => "image/svg+xml",
            Some("png") => "image/png",
            _ => "application/octet-stream",
        };
        Ok(ApiResponse::new(200, ct, bytes))
    }
}

const INDEX: &str = "geoexif\n\n\
GET /markers.xml?filter     marker feed (XML)\n\
GET /markers.json?filter    marker feed (JSON)\n\
GET /devices                device ranking\n\
GET /status                 latest finished run\n\
GET /thumb/{id}             thumbnail\n\
GET /image/{id}             original image\n\
GET /meta/{id}              harvested metadata and findings\n\
GET /linked/{id}?slot=h     untagged images of the same device within +/- h hours\n\
GET /group/{id}             markers sharing the same coordinates\n\
GET /report?filter&format=  live report (html or json)\n\n\
filter: lat, lng, radius (km), device (repeatable), from, to, slot\n";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{generate, FixtureSpec, CORPUS_DIR};
    use crate::scan::{scan_tree, ScanConfig, ScanProgress};

    #[test]
    fn no_run_is_conflict() {
        let ws = tempfile::tempdir().unwrap();
        let api = Api::new(ws.path());
        assert_eq!(api.get("/markers.xml").status, 409);
        assert_eq!(api.get("/markers.xml?slot=9").status, 400);
        assert_eq!(api.get("/").status, 200);
        assert_eq!(api.get("/nope").status, 404);
    }

    #[test]
    fn endpoints_on_fig6() {
        let out = tempfile::tempdir().unwrap();
        let ws = tempfile::tempdir().unwrap();
        generate(&FixtureSpec::preset("fig6").unwrap(), out.path()).unwrap();
        scan_tree(&ScanConfig::new(out.path().join(CORPUS_DIR), ws.path()), &ScanProgress::default()).unwrap();
        let api = Api::new(ws.path());
        let xml = api.get("/markers.xml");
        assert_eq!(xml.status, 200);
        assert_eq!(xml.header("access-control-allow-origin"), Some("*"));
        assert!(xml.text().contains("id=\"26\""));
        let linked: serde_json::Value = serde_json::from_slice(&api.get("/linked/26?slot=2").body).unwrap();
        assert_eq!(linked.as_array().unwrap().len(), 15);
        assert_eq!(api.get("/linked/26?slot=7").status, 400);
        assert_eq!(api.get("/linked/26").status, 400);
        assert_eq!(api.get("/linked/1?slot=1").status, 404);
        assert_eq!(api.get("/thumb/26").status, 200);
        assert_eq!(api.get("/thumb/999").status, 404);
        assert_eq!(api.get("/image/abc").status, 404);
        let img = api.get("/image/26");
        assert_eq!((img.status, img.content_type.as_str()), (200, "image/jpeg"));
        assert_eq!(img.header("X-Content-Matches-Scan"), Some("true"));
        let meta: serde_json::Value = serde_json::from_slice(&api.get("/meta/1").body).unwrap();
        assert_eq!(meta["geotagged"], json!(false));
        assert_eq!(api.get("/group/26").status, 200);
        assert_eq!(api.get("/report?format=pdf").status, 400);
        assert_eq!(api.get("/report?format=json").status, 200);
    }
}
