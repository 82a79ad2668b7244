#![allow(dead_code)]

use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{header, HeaderMap, Method, Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

use storyexp_core::gesture::{GlyphBox, LineBox, Stroke};
use storyexp_service::{router, AppState, ServiceConfig};

pub const GLYPH: f64 = 10.0;
pub const LINE_PITCH: f64 = 30.0;

pub struct App {
    pub router: Router,
    pub state: Arc<AppState>,
    pub dir: TempDir,
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes)
            .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.bytes)))
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.bytes.clone()).unwrap()
    }
}

impl App {
    pub fn new() -> Self {
        Self::with(|_| {})
    }

    pub fn with(tweak: impl FnOnce(&mut ServiceConfig)) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ServiceConfig::new(dir.path());
        tweak(&mut cfg);
        Self::over(dir, cfg)
    }

    /// A fresh process over an existing data directory.
    pub fn restart(self) -> Self {
        let cfg = self.state.config.clone();
        Self::over(self.dir, cfg)
    }

    fn over(dir: TempDir, cfg: ServiceConfig) -> Self {
        let state = Arc::new(AppState::new(cfg));
        Self { router: router(state.clone()), state, dir }
    }

    pub async fn send(&self, method: Method, uri: &str, body: Option<Value>, if_match: Option<u64>) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(v) = if_match {
            req = req.header(header::IF_MATCH, format!("\"{v}\""));
        }
        let req = match body {
            Some(b) => req.header(header::CONTENT_TYPE, "application/json").body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec();
        Reply { status, headers, bytes }
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.send(Method::GET, uri, None, None).await
    }

    pub async fn post(&self, uri: &str, body: Value) -> Reply {
        self.send(Method::POST, uri, Some(body), None).await
    }

    pub async fn patch(&self, uri: &str, body: Value) -> Reply {
        self.send(Method::PATCH, uri, Some(body), None).await
    }

    pub async fn delete(&self, uri: &str) -> Reply {
        self.send(Method::DELETE, uri, None, None).await
    }

    /// Uploads `text` and returns the new id.
    pub async fn upload(&self, text: &str) -> String {
        let r = self.post("/documents", json!({ "title": "t", "text": text })).await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
        r.json()["id"].as_str().unwrap().to_owned()
    }

    pub async fn version(&self, id: &str) -> u64 {
        self.get(&format!("/documents/{id}")).await.json()["version"].as_u64().unwrap()
    }

    pub async fn entity(&self, id: &str, kind: &str, name: &str) -> String {
        let r = self.post(&format!("/documents/{id}/entities"), json!({ "kind": kind, "name": name })).await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
        r.json()["entity"]["id"].as_str().unwrap().to_owned()
    }

    pub async fn fragment(&self, id: &str, persons: &[&str], start: i64, end: i64) -> String {
        let r = self
            .post(
                &format!("/documents/{id}/fragments"),
                json!({ "persons": persons, "startStep": start, "endStep": end }),
            )
            .await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
        r.json()["fragment"]["id"].as_str().unwrap().to_owned()
    }
}

/// Monospaced geometry for a page whose lines are separated by `\n`.
pub fn page_lines(page: &str) -> Vec<LineBox> {
    let mut offset = 0;
    page.split('\n')
        .enumerate()
        .map(|(i, text)| {
            let top = i as f64 * LINE_PITCH;
            let glyphs = (0..text.chars().count())
                .map(|k| GlyphBox { offset: offset + k, x0: k as f64 * GLYPH, x1: (k + 1) as f64 * GLYPH })
                .collect();
            offset += text.chars().count() + 1;
            LineBox { line_index: i, baseline_y: top + 16.0, top_y: top, bottom_y: top + 20.0, glyphs }
        })
        .collect()
}

/// Column and line of a page offset.
pub fn locate(page: &str, offset: usize) -> (usize, usize) {
    let before: String = page.chars().take(offset).collect();
    let line = before.matches('\n').count();
    let col = before.rsplit('\n').next().unwrap().chars().count();
    (line, col)
}

pub fn underline_ink(page: &str, phrase: &str) -> Vec<Stroke> {
    let start = page.find(phrase).unwrap();
    let (line, col) = locate(page, start);
    let (x0, x1) = (col as f64 * GLYPH + 2.0, (col + phrase.chars().count()) as f64 * GLYPH - 2.0);
    let y = line as f64 * LINE_PITCH + 18.0;
    vec![Stroke::from_xy(&(0..=20).map(|i| (x0 + (x1 - x0) * i as f64 / 20.0, y)).collect::<Vec<_>>())]
}

pub fn box_ink(page: &str, phrase: &str) -> Vec<Stroke> {
    let start = page.find(phrase).unwrap();
    let (line, col) = locate(page, start);
    let x0 = col as f64 * GLYPH - 4.0;
    let x1 = (col + phrase.chars().count()) as f64 * GLYPH + 4.0;
    let (y0, y1) = (line as f64 * LINE_PITCH - 3.0, line as f64 * LINE_PITCH + 23.0);
    let corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)];
    let mut pts = Vec::new();
    for c in corners.windows(2) {
        let ((ax, ay), (bx, by)) = (c[0], c[1]);
        for s in 0..25 {
            let t = s as f64 / 25.0;
            pts.push((ax + t * (bx - ax), ay + t * (by - ay)));
        }
    }
    pts.push((x0, y0));
    vec![Stroke::from_xy(&pts)]
}

pub fn ink_request(page: &str, strokes: Vec<Stroke>) -> Value {
    json!({ "pageIndex": 0, "strokes": strokes, "lines": page_lines(page) })
}
