//! HTTP binding of the annotation API. Every route maps onto one
//! [`ApiRequest`]; `POST /api` accepts a raw request document.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use capforge_core::annotation::{AnnotationError, AnnotationService, ApiRequest, TaskInstance, TaskStatus, Verdict};
use serde::Deserialize;
use serde_json::json;

type Service = Arc<AnnotationService>;

pub struct ApiFailure(AnnotationError);

impl IntoResponse for ApiFailure {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            AnnotationError::NotFound(_) => StatusCode::NOT_FOUND,
            AnnotationError::Duplicate(_) | AnnotationError::Conflict(_) => StatusCode::CONFLICT,
            AnnotationError::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            AnnotationError::Policy(_) => StatusCode::FORBIDDEN,
            AnnotationError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = json!({"error": self.0.kind(), "message": self.0.to_string()});
        (status, Json(body)).into_response()
    }
}

async fn call(service: Service, request: ApiRequest) -> Result<Response, ApiFailure> {
    let result = tokio::task::spawn_blocking(move || service.handle(request))
        .await
        .map_err(|e| ApiFailure(AnnotationError::Store(e.to_string())))?;
    result.map(|r| Json(r).into_response()).map_err(ApiFailure)
}

#[derive(Deserialize)]
struct ListQuery {
    status: Option<TaskStatus>,
}

#[derive(Deserialize)]
struct CreateBody {
    instances: Vec<TaskInstance>,
    #[serde(default = "system")]
    actor: String,
}

fn system() -> String {
    "system".into()
}

#[derive(Deserialize)]
struct ClaimBody {
    annotator_id: String,
}

#[derive(Deserialize)]
struct EditBody {
    annotator_id: String,
    span: (usize, usize),
    replacement: String,
}

#[derive(Deserialize)]
struct VerifyBody {
    verifier_id: String,
    verdict: Verdict,
}

#[derive(Deserialize)]
struct ExportQuery {
    #[serde(default)]
    pair_positives: bool,
}

pub fn router(service: Service) -> Router {
    Router::new()
        .route(
            "/tasks",
            get(|State(s): State<Service>, Query(q): Query<ListQuery>| call(s, ApiRequest::ListTasks { status: q.status }))
                .post(|State(s): State<Service>, Json(b): Json<CreateBody>| {
                    call(
                        s,
                        ApiRequest::CreateTasks {
                            instances: b.instances,
                            actor: b.actor,
                        },
                    )
                }),
        )
        .route(
            "/tasks/{id}",
            get(|State(s): State<Service>, Path(task_id): Path<String>| call(s, ApiRequest::GetTask { task_id })),
        )
        .route(
            "/tasks/{id}/claim",
            post(|State(s): State<Service>, Path(task_id): Path<String>, Json(b): Json<ClaimBody>| {
                call(
                    s,
                    ApiRequest::Claim {
                        task_id,
                        annotator_id: b.annotator_id,
                    },
                )
            }),
        )
        .route(
            "/tasks/{id}/edit",
            post(|State(s): State<Service>, Path(task_id): Path<String>, Json(b): Json<EditBody>| {
                call(
                    s,
                    ApiRequest::SubmitEdit {
                        task_id,
                        annotator_id: b.annotator_id,
                        span: b.span,
                        replacement: b.replacement,
                    },
                )
            }),
        )
        .route(
            "/tasks/{id}/verify",
            post(|State(s): State<Service>, Path(task_id): Path<String>, Json(b): Json<VerifyBody>| {
                call(
                    s,
                    ApiRequest::Verify {
                        task_id,
                        verifier_id: b.verifier_id,
                        verdict: b.verdict,
                    },
                )
            }),
        )
        .route(
            "/export",
            get(|State(s): State<Service>, Query(q): Query<ExportQuery>| {
                call(
                    s,
                    ApiRequest::Export {
                        pair_positives: q.pair_positives,
                    },
                )
            }),
        )
        .route("/api", post(|State(s): State<Service>, Json(r): Json<ApiRequest>| call(s, r)))
        .with_state(service)
}
