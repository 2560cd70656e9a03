//! HTTP front end for interactive segmentation: upload a volume, browse
//! slices, place a seed, segment, inspect contours and compare masks.
//!
//! All routes live under `/api/v1`:
//!
//! | method | path                          | result                           |
//! |--------|-------------------------------|----------------------------------|
//! | POST   | `/volumes`                    | volume summary                   |
//! | GET    | `/volumes`                    | summaries of every volume        |
//! | GET    | `/volumes/{id}`               | volume summary                   |
//! | GET    | `/volumes/{id}/slice`         | 8-bit PNG                        |
//! | POST   | `/volumes/{id}/segment`       | mask id, cut value, contours     |
//! | POST   | `/masks`                      | mask id of an uploaded mask      |
//! | GET    | `/masks/{id}`                 | single-file MetaImage mask       |
//! | POST   | `/masks/{id}/dsc`             | Dice coefficient                 |
//!
//! Volumes and masks are uploaded either as one `ElementDataFile = LOCAL`
//! MetaImage body or as `multipart/form-data` with a `header` part and an
//! optional `raw` part.

pub mod contour;
mod error;
pub mod slice;
mod store;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequest, Multipart, Path as UrlPath, Query, Request, State};
use axum::http::header::{CONTENT_DISPOSITION, CONTENT_TYPE};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use cubecut::segment::{segment, BoundaryPlacement, Params, TemplateKind};
use cubecut::volume::{decode_mhd, load_mhd, mask_to_local_mhd, save_mask_mhd, Mask, Volume};

pub use error::ApiError;
pub use store::SessionStore;

use contour::{trace_contours, Contour};
use slice::Plane;

pub struct AppState {
    pub store: SessionStore,
    /// Segmentation masks are also written here when set.
    pub data_dir: Option<PathBuf>,
}

impl AppState {
    pub fn in_memory() -> Self {
        AppState {
            store: SessionStore::default(),
            data_dir: None,
        }
    }

    /// State backed by `dir`: every readable `*.mhd` volume directly inside
    /// it is preloaded (in file name order), masks go to `dir/masks`.
    pub fn with_data_dir(dir: &Path) -> std::io::Result<Self> {
        let store = SessionStore::default();
        let mut headers: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "mhd"))
            .collect();
        headers.sort();
        for path in headers {
            match load_mhd(&path) {
                Ok(v) => {
                    let id = store.insert_volume(v);
                    eprintln!("cubecut-server: volume {id} <- {}", path.display());
                }
                Err(e) => eprintln!("cubecut-server: skipping {}: {e}", path.display()),
            }
        }
        Ok(AppState {
            store,
            data_dir: Some(dir.to_path_buf()),
        })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/volumes", post(upload_volume).get(list_volumes))
        .route("/volumes/{id}", get(volume_info))
        .route("/volumes/{id}/slice", get(volume_slice))
        .route("/volumes/{id}/segment", post(segment_volume))
        .route("/masks", post(upload_mask))
        .route("/masks/{id}", get(download_mask))
        .route("/masks/{id}/dsc", post(mask_dsc));
    Router::new().nest("/api/v1", api).with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(port: u16, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("cubecut-server: listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state))).await
}

type Shared = State<Arc<AppState>>;

#[derive(Debug, Serialize, Deserialize)]
pub struct VolumeSummary {
    pub volume_id: u64,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub min: f64,
    pub max: f64,
}

impl VolumeSummary {
    fn new(id: u64, v: &Volume) -> Self {
        let (min, max) = v.min_max();
        VolumeSummary {
            volume_id: id,
            dims: v.dims(),
            spacing: v.spacing(),
            origin: v.origin(),
            min,
            max,
        }
    }
}

fn parse_id(raw: &str) -> Result<u64, ApiError> {
    raw.parse()
        .map_err(|_| ApiError::NotFound(format!("no object with id {raw:?}")))
}

fn get_volume(state: &AppState, raw: &str) -> Result<(u64, Arc<Volume>), ApiError> {
    let id = parse_id(raw)?;
    state
        .store
        .volume(id)
        .map(|v| (id, v))
        .ok_or_else(|| ApiError::NotFound(format!("no volume {id}")))
}

fn get_mask(state: &AppState, raw: &str) -> Result<(u64, Arc<Mask>), ApiError> {
    let id = parse_id(raw)?;
    state
        .store
        .mask(id)
        .map(|m| (id, m))
        .ok_or_else(|| ApiError::NotFound(format!("no mask {id}")))
}

/// Decodes an uploaded MetaImage from either body layout.
async fn read_upload(req: Request) -> Result<Volume, ApiError> {
    let multipart = req
        .headers()
        .get(CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    if !multipart {
        let body = Bytes::from_request(req, &())
            .await
            .map_err(|e| ApiError::BadRequest(e.to_string()))?;
        return Ok(decode_mhd(&body, None)?);
    }

    let mut form = Multipart::from_request(req, &())
        .await
        .map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let mut header = None;
    let mut raw = None;
    while let Some(field) = form
        .next_field()
        .await
        .map_err(|e| ApiError::BadRequest(e.to_string()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let bytes = field
            .bytes()
            .await
            .map_err(|e| ApiError::BadRequest(e.to_string()))?;
        match name.as_str() {
            "header" => header = Some(bytes),
            "raw" => raw = Some(bytes),
            other => {
                return Err(ApiError::BadRequest(format!(
                    "unexpected form field {other:?}"
                )))
            }
        }
    }
    let header =
        header.ok_or_else(|| ApiError::BadRequest("missing form field \"header\"".into()))?;
    Ok(decode_mhd(&header, raw.as_deref())?)
}

async fn upload_volume(
    State(state): Shared,
    req: Request,
) -> Result<Json<VolumeSummary>, ApiError> {
    let volume = read_upload(req).await?;
    let summary = VolumeSummary::new(0, &volume);
    let id = state.store.insert_volume(volume);
    Ok(Json(VolumeSummary {
        volume_id: id,
        ..summary
    }))
}

async fn list_volumes(State(state): Shared) -> Json<Vec<VolumeSummary>> {
    let list = state
        .store
        .volume_ids()
        .into_iter()
        .filter_map(|id| state.store.volume(id).map(|v| VolumeSummary::new(id, &v)))
        .collect();
    Json(list)
}

async fn volume_info(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<VolumeSummary>, ApiError> {
    let (id, v) = get_volume(&state, &id)?;
    Ok(Json(VolumeSummary::new(id, &v)))
}

async fn volume_slice(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
    Query(query): Query<BTreeMap<String, String>>,
) -> Result<impl IntoResponse, ApiError> {
    let (_, volume) = get_volume(&state, &id)?;
    let plane: Plane = query
        .get("plane")
        .ok_or_else(|| ApiError::BadRequest("missing query parameter \"plane\"".into()))?
        .parse()
        .map_err(ApiError::BadRequest)?;
    let index: usize = query
        .get("index")
        .ok_or_else(|| ApiError::BadRequest("missing query parameter \"index\"".into()))?
        .parse()
        .map_err(|_| ApiError::BadRequest("index must be a non-negative integer".into()))?;
    let (lo, hi) = match query.get("window") {
        None => volume.min_max(),
        Some(w) => parse_window(w)?,
    };

    let (width, height, greys) = slice::extract(volume.data(), volume.dims(), plane, index)
        .ok_or_else(|| {
            let depth = plane.extent(volume.dims()).2;
            ApiError::NotFound(format!("slice {index} out of range, {plane:?} has {depth}"))
        })?;
    let png = slice::encode_png(width, height, &slice::window_to_u8(&greys, lo, hi));
    Ok(([(CONTENT_TYPE, "image/png")], png))
}

fn parse_window(w: &str) -> Result<(f64, f64), ApiError> {
    let bad = || ApiError::BadRequest(format!("window must be LO,HI with LO <= HI, got {w:?}"));
    let (lo, hi) = w.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateName {
    #[default]
    Cube,
    Sphere,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementName {
    Node,
    Midpoint,
}

/// Segmentation request. Everything but the seed is optional and falls
/// back to the library defaults. For spheres `edge_mm` is the diameter.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRequest {
    pub seed_mm: [f64; 3],
    #[serde(default)]
    pub template: TemplateName,
    pub edge_mm: Option<f64>,
    pub m: Option<usize>,
    pub n_theta: Option<usize>,
    pub n_phi: Option<usize>,
    pub k: Option<usize>,
    pub delta: Option<usize>,
    pub stats_halfwidth: Option<usize>,
    pub placement: Option<PlacementName>,
}

impl SegmentRequest {
    pub fn params(&self) -> Params {
        let mut p = Params::new(self.seed_mm);
        let size = self.edge_mm.unwrap_or(TemplateKind::DEFAULT_EDGE_MM);
        p.template = match self.template {
            TemplateName::Cube => TemplateKind::Cube {
                edge_mm: size,
                m: self.m.unwrap_or(TemplateKind::DEFAULT_RAYS_PER_EDGE),
            },
            TemplateName::Sphere => TemplateKind::Sphere {
                diameter_mm: size,
                n_theta: self.n_theta.unwrap_or(TemplateKind::DEFAULT_RINGS),
                n_phi: self.n_phi.unwrap_or(TemplateKind::DEFAULT_RAYS_PER_RING),
            },
        };
        p.k = self.k.unwrap_or(p.k);
        p.delta = self.delta.unwrap_or(p.delta);
        p.stats_halfwidth = self.stats_halfwidth.unwrap_or(p.stats_halfwidth);
        if let Some(pl) = self.placement {
            p.placement = match pl {
                PlacementName::Node => BoundaryPlacement::Node,
                PlacementName::Midpoint => BoundaryPlacement::Midpoint,
            };
        }
        p
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SliceContours {
    pub index: usize,
    /// Closed polylines in pixel-corner coordinates.
    pub contours: Vec<Contour>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SegmentResponse {
    pub mask_id: u64,
    pub cut_value: f64,
    pub warnings: Vec<String>,
    pub voxel_count: usize,
    /// Per ray, the last layer inside the object.
    pub boundaries: Vec<usize>,
    /// Slices that intersect the mask, for every plane.
    pub per_slice_contours: BTreeMap<Plane, Vec<SliceContours>>,
}

/// Contours of every non-empty slice of `mask` along each plane.
pub fn mask_contours(mask: &Mask) -> BTreeMap<Plane, Vec<SliceContours>> {
    Plane::ALL
        .into_iter()
        .map(|plane| {
            let depth = plane.extent(mask.dims()).2;
            let slices = (0..depth)
                .filter_map(|index| {
                    let (w, h, px) = slice::extract(mask.data(), mask.dims(), plane, index)?;
                    if !px.iter().any(|&b| b) {
                        return None;
                    }
                    Some(SliceContours {
                        index,
                        contours: trace_contours(w, h, &px),
                    })
                })
                .collect();
            (plane, slices)
        })
        .collect()
}

async fn segment_volume(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<SegmentResponse>, ApiError> {
    let (_, volume) = get_volume(&state, &id)?;
    let request: SegmentRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let params = request.params();

    let (seg, contours) = tokio::task::spawn_blocking(move || {
        segment(&volume, &params).map(|seg| {
            let contours = mask_contours(&seg.mask);
            (seg, contours)
        })
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;

    let voxel_count = seg.mask.count();
    let mask_id = state.store.insert_mask(seg.mask.clone());
    if let Some(dir) = &state.data_dir {
        let path = dir.join("masks").join(format!("mask-{mask_id}.mhd"));
        std::fs::create_dir_all(dir.join("masks"))
            .map_err(|e| ApiError::Internal(e.to_string()))?;
        save_mask_mhd(&seg.mask, &path)?;
    }
    Ok(Json(SegmentResponse {
        mask_id,
        cut_value: seg.cut_value,
        warnings: seg.warnings.iter().map(ToString::to_string).collect(),
        voxel_count,
        boundaries: seg.boundaries,
        per_slice_contours: contours,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MaskSummary {
    pub mask_id: u64,
    pub dims: [usize; 3],
    pub voxel_count: usize,
}

async fn upload_mask(State(state): Shared, req: Request) -> Result<Json<MaskSummary>, ApiError> {
    let mask = Mask::from_volume(&read_upload(req).await?);
    let (dims, voxel_count) = (mask.dims(), mask.count());
    let mask_id = state.store.insert_mask(mask);
    Ok(Json(MaskSummary {
        mask_id,
        dims,
        voxel_count,
    }))
}

async fn download_mask(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
) -> Result<impl IntoResponse, ApiError> {
    let (id, mask) = get_mask(&state, &id)?;
    Ok((
        [
            (CONTENT_TYPE, "application/octet-stream".to_string()),
            (
                CONTENT_DISPOSITION,
                format!("attachment; filename=\"mask-{id}.mhd\""),
            ),
        ],
        mask_to_local_mhd(&mask),
    ))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DscRequest {
    pub reference_mask_id: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DscResponse {
    pub dsc: f64,
}

async fn mask_dsc(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<DscResponse>, ApiError> {
    let (_, mask) = get_mask(&state, &id)?;
    let request: DscRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let (_, reference) = get_mask(&state, &request.reference_mask_id.to_string())?;
    let dsc = cubecut::eval::dsc(&mask, &reference)?;
    Ok(Json(DscResponse { dsc }))
}
