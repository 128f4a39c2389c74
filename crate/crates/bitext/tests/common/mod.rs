#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Instant;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn corpus() -> PathBuf {
    fixtures().join("corpus")
}

/// (pair id, engineered role) from the corpus key.
pub fn corpus_key() -> Vec<(String, String)> {
    std::fs::read_to_string(corpus().join("key.tsv"))
        .unwrap()
        .lines()
        .map(|l| {
            let (id, kind) = l.split_once('\t').unwrap();
            (id.to_string(), kind.to_string())
        })
        .collect()
}

pub fn key_ids(kinds: &[&str]) -> Vec<String> {
    corpus_key().into_iter().filter(|(_, k)| kinds.contains(&k.as_str())).map(|(id, _)| id).collect()
}

#[derive(Clone, Debug)]
pub struct Route {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Route {
    pub fn html(body: &str) -> Self {
        Route::with_type(200, "text/html; charset=utf-8", body.as_bytes())
    }

    pub fn with_type(status: u16, content_type: &str, body: &[u8]) -> Self {
        Route { status, headers: vec![("Content-Type".into(), content_type.into())], body: body.to_vec() }
    }

    pub fn status(status: u16) -> Self {
        Route { status, headers: vec![], body: vec![] }
    }

    pub fn redirect(location: &str) -> Self {
        Route { status: 301, headers: vec![("Location".into(), location.into())], body: vec![] }
    }
}

/// A minimal HTTP/1.1 server on a loopback port. Every request line is
/// logged with its arrival time; unknown paths get 404.
pub struct StubServer {
    pub addr: SocketAddr,
    log: Arc<Mutex<Vec<(String, Instant)>>>,
}

impl StubServer {
    pub fn start(routes: Vec<(&str, Route)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let routes: Arc<HashMap<String, Route>> =
            Arc::new(routes.into_iter().map(|(p, r)| (p.to_string(), r)).collect());
        let log = Arc::new(Mutex::new(Vec::new()));
        let server_log = log.clone();
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let routes = routes.clone();
                let log = server_log.clone();
                thread::spawn(move || serve(stream, &routes, &log));
            }
        });
        StubServer { addr, log }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    pub fn requests(&self) -> Vec<(String, Instant)> {
        self.log.lock().unwrap().clone()
    }

    pub fn paths(&self) -> Vec<String> {
        self.requests().into_iter().map(|(p, _)| p).collect()
    }
}

fn serve(stream: TcpStream, routes: &HashMap<String, Route>, log: &Mutex<Vec<(String, Instant)>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
        return;
    }
    let arrived = Instant::now();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
            break;
        }
    }
    let path = request_line.split_whitespace().nth(1).unwrap_or("").to_string();
    log.lock().unwrap().push((path.clone(), arrived));
    let route = routes.get(&path).cloned().unwrap_or_else(|| Route::status(404));
    let mut response =
        format!("HTTP/1.1 {} Stub\r\nContent-Length: {}\r\nConnection: close\r\n", route.status, route.body.len());
    for (k, v) in &route.headers {
        response.push_str(&format!("{k}: {v}\r\n"));
    }
    response.push_str("\r\n");
    let mut stream = stream;
    let _ = stream.write_all(response.as_bytes());
    let _ = stream.write_all(&route.body);
    let _ = stream.flush();
}
