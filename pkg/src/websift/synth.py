"""Synthetic shop-traffic traces with labelled attack sessions.

Normal sessions browse a small web shop: product pages, login, checkout,
profile edits, downloads, directory indexes and static resources. Attack
sessions open with a malicious request whose signature mostly shows in
combinations of features: a value length outside the band a key normally
takes (too long or emptied), keys that do not belong to the requested page,
a parameterless request for a copy of a page under an extension that
legitimate downloads also use, or a path outside the URL grammar. Header
columns ride along as passthrough variables and carry little or no signal.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

BASE = "http://localhost:8080/"

TRACE_COLUMNS = (
    "method", "url", "payload", "cookie", "label",
    "host", "content_length", "content_type", "accept", "connection", "pragma", "cache_control",
)
ATTACK_KINDS = ("short_injection", "numeric_tamper", "backup_file", "foreign_keys", "bad_path", "text_injection")
# weights lean on the kinds that need feature interactions to detect
DEFAULT_MIX = (0.05, 0.35, 0.15, 0.1, 0.15, 0.2)
MAX_REQUESTS = 4
# chance that a later request in an attack session is malicious too
REPEAT = 0.5

PASSTHROUGH = ("host", "content_length", "content_type", "accept", "connection", "pragma", "cache_control")

_WORDS = ("vino", "rioja", "queso", "manchego", "jamon", "iberico", "aceite", "oliva", "miel", "turron",
          "cava", "azafran", "chorizo", "pimenton", "almendra", "sidra")
_CITIES = ("Zaragoza", "Burgos", "Madrid", "Sevilla", "Bilbao", "Valencia", "Leon", "Soria", "Teruel", "Huesca")

# page -> (method, keys)
_PAGES = {
    "tienda1/publico/anadir.jsp": ("GET", ("id", "nombre", "precio", "cantidad", "B1")),
    "tienda1/publico/autenticar.jsp": ("POST", ("modo", "login", "pwd", "remember", "B1")),
    "tienda1/publico/pagar.jsp": ("GET", ("modo",)),
    "tienda1/publico/registro.jsp": ("POST", ("modo", "login", "password", "nombre", "apellidos", "email", "dni",
                                              "direccion", "ciudad", "cp", "provincia", "ntc", "B1")),
    "tienda1/miembros/editar.jsp": ("POST", ("modo", "nombre", "apellidos", "email", "dni", "direccion", "ciudad",
                                             "cp", "provincia", "ntc", "B1")),
    "tienda1/publico/caracteristicas.jsp": ("GET", ("id",)),
    "tienda1/publico/vaciar.jsp": ("GET", ("B2",)),
    "tienda1/index.jsp": ("GET", ()),
    "tienda1/global/menum.jsp": ("GET", ()),
    "tienda1/miembros/salir.jsp": ("GET", ()),
}
_STATIC = ("tienda1/imagenes/logo.gif", "tienda1/imagenes/carrito.gif", "tienda1/imagenes/1.jpg",
           "tienda1/imagenes/2.jpg", "tienda1/global/estilos.css", "tienda1/global/funciones.js",
           "tienda1/imagenes/nuestratierra.jpg", "tienda1/favicon.ico")
# shared by legitimate downloads and by probes for source copies of pages
_BACKUP_EXT = ("old", "bak", "inc", "zip", "txt", "xml")
_DOWNLOADS = ("catalogo", "tarifas", "condiciones", "ofertas2009", "manual")
_INDEXES = ("tienda1/", "tienda1/publico/", "tienda1/imagenes/")
_SHORT_KEYS = ("id", "precio", "cantidad", "cp", "modo", "remember")


def _choice(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _word(rng, lo=4, hi=12) -> str:
    return "".join(_choice(rng, "abcdefghijklmnoprstuvz") for _ in range(int(rng.integers(lo, hi + 1))))


def _value(rng, key: str) -> str:
    if key == "id":
        return str(int(rng.integers(1, 40)))
    if key == "precio":
        return str(int(rng.integers(15, 999)))
    if key == "cantidad":
        return str(int(rng.integers(1, 99)))
    if key == "cp":
        return f"{int(rng.integers(1000, 52999)):05d}"
    if key == "modo":
        return _choice(rng, ("entrar", "insertar", "registro", "editar"))
    if key == "remember":
        return _choice(rng, ("on", ""))
    if key == "nombre":
        return "+".join(_choice(rng, _WORDS).capitalize() for _ in range(int(rng.integers(1, 3))))
    if key in ("ciudad", "provincia"):
        return _choice(rng, _CITIES)
    if key == "email":
        return f"{_word(rng, 3, 10)}%40{_word(rng, 3, 8)}.es"
    if key == "dni":
        return f"{int(rng.integers(10**7, 10**8))}{_choice(rng, 'ABCDEFGHJKLMNPQRSTVWXYZ')}"
    if key == "direccion":
        return "+".join(_word(rng, 3, 9) for _ in range(int(rng.integers(2, 6)))) + f"+{int(rng.integers(1, 120))}"
    if key == "ntc":
        return str(int(rng.integers(10**15, 10**16 - 1)))
    if key in ("B1", "B2"):
        return _choice(rng, ("Comprar", "Registrar", "Entrar", "Vaciar+carrito", "Pasar+por+caja"))
    return _word(rng)


_INJECTIONS = (
    "'+OR+'1'%3D'1", "%27%3B+DROP+TABLE+usuarios%3B--", "%3Cscript%3Ealert%28%27x%27%29%3C%2Fscript%3E",
    "..%2F..%2F..%2Fetc%2Fpasswd", "%22%3E%3Ciframe+src%3Dhttp%3A%2F%2Fx.example%3E", "1+UNION+SELECT+pass+FROM+users",
    "%00", "bob%40example.com%0D%0ABcc%3Avictim%40example.com",
)


@dataclass
class _Request:
    method: str
    url: str
    payload: str
    attack: bool


def _normal_request(rng) -> _Request:
    u = rng.random()
    if u < 0.18:
        return _Request("GET", BASE + _choice(rng, _STATIC), "", False)
    if u < 0.30:
        return _Request("GET", BASE + f"tienda1/descargas/{_choice(rng, _DOWNLOADS)}.{_choice(rng, _BACKUP_EXT)}", "", False)
    if u < 0.38:
        return _Request("GET", BASE + _choice(rng, _INDEXES), "", False)
    page = _choice(rng, tuple(_PAGES))
    method, keys = _PAGES[page]
    pairs = [(k, _value(rng, k)) for k in keys]
    if method == "GET" and rng.random() < 0.08:
        method = "PUT" if rng.random() < 0.5 else method
    return _Request(method, BASE + page, "&".join(f"{k}={v}" for k, v in pairs), False)


def _attack_request(rng, kind: int, blank: bool) -> _Request:
    page = _choice(rng, tuple(p for p, (_, ks) in _PAGES.items() if ks))
    method, keys = _PAGES[page]
    pairs = [[k, _value(rng, k)] for k in keys]
    url = BASE + page
    if kind == 0:
        # injection into a key whose values are normally short
        short = [p for p in pairs if p[0] in _SHORT_KEYS] or pairs
        target = _choice(rng, short)
        target[1] = target[1] + _choice(rng, _INJECTIONS)
    elif kind == 1:
        # tampered numeric parameter: emptied or absurdly long
        nums = [p for p in pairs if p[0] in ("id", "precio", "cantidad", "cp", "ntc")] or pairs
        target = _choice(rng, nums)
        target[1] = "" if blank else target[1] + "".join(str(int(d)) for d in rng.integers(0, 10, int(rng.integers(6, 12))))
    elif kind == 2:
        # request for a backup or source copy of an application page, no parameters
        stem = page.rsplit(".", 1)[0]
        url = BASE + f"{stem}.{_choice(rng, _BACKUP_EXT)}"
        method, pairs = "GET", []
    elif kind == 3:
        # parameters that do not belong to the requested page
        other = _choice(rng, tuple(p for p in _PAGES if p != page and _PAGES[p][1]))
        extra = [[k, _value(rng, k)] for k in _PAGES[other][1][:3]]
        pairs = pairs + extra
        method = "GET" if method == "POST" else "POST"
    elif kind == 4:
        # path outside the application grammar
        url = BASE + _choice(rng, ("tienda1/publico/", "tienda1/../../etc/passwd", "tienda1//miembros/editar.jsp",
                                   "tienda1/publico/anadir", "tienda1/WEB-INF/web.xml"))
    else:
        # free-text field either blanked or carrying an injection
        long = [p for p in pairs if p[0] in ("nombre", "direccion", "apellidos", "email", "login")] or pairs
        target = _choice(rng, long)
        target[1] = "" if blank else _choice(rng, _INJECTIONS) + target[1]
    if rng.random() < 0.1:
        method = "PUT"
    return _Request(method, url, "&".join(f"{k}={v}" for k, v in pairs), True)


def _headers(rng, req: _Request) -> dict:
    return {
        "host": _choice(rng, ("localhost:8080", "localhost:8080", "localhost:8080", "localhost:9090")),
        "content_length": str(len(req.payload) if req.method != "GET" else 0) if rng.random() < 0.9
        else str(int(rng.integers(0, 5000))),
        "content_type": _choice(rng, ("application/x-www-form-urlencoded", "", "text/plain", "multipart/form-data")),
        "accept": _choice(rng, ("text/html", "text/xml", "*/*", "application/xml", "text/plain", "image/png",
                                "application/json", "text/css")),
        "connection": _choice(rng, ("close", "keep-alive", "Keep-Alive", "upgrade")),
        "pragma": _choice(rng, ("no-cache", "", "no-store")),
        "cache_control": _choice(rng, ("no-cache", "max-age=0", "", "no-store", "private", "public")),
    }


def generate_trace(n_sessions: int, attack_fraction: float = 0.683, seed: int = 0, label_noise: float = 0.005,
                   attack_mix=None) -> list[dict]:
    """Rows of a trace; exactly ``round(n_sessions * attack_fraction)`` sessions are attacks.

    ``label_noise`` flips the class of that fraction of sessions (drawn
    before labels are written, so class counts stay exact).
    """
    if n_sessions < 10:
        raise ValueError("n_sessions must be at least 10")
    if not 0.0 <= attack_fraction <= 1.0:
        raise ValueError("attack_fraction must lie in [0, 1]")
    mix = np.asarray(DEFAULT_MIX if attack_mix is None else attack_mix, dtype=float)
    mix = mix / mix.sum()
    rng = np.random.default_rng(seed)
    n_attack = int(round(n_sessions * attack_fraction))
    is_attack = np.zeros(n_sessions, dtype=bool)
    is_attack[rng.permutation(n_sessions)[:n_attack]] = True
    # noisy sessions swap their content type but keep the label slot
    flip = rng.random(n_sessions) < label_noise

    rows = []
    for s in range(n_sessions):
        cookie = f"{int(rng.integers(16**11, 16**12)):012X}{s:05d}"
        attack_content = is_attack[s] != flip[s]
        if attack_content:
            kind = int(rng.choice(len(ATTACK_KINDS), p=mix))
            # a probing client repeats one technique; tampering goes one way per session
            blank = bool(rng.random() < 0.5)
            n_req = int(rng.integers(1, MAX_REQUESTS + 1))
            reqs = [_attack_request(rng, kind, blank) if i == 0 or rng.random() < REPEAT else _normal_request(rng)
                    for i in range(n_req)]
        else:
            reqs = [_normal_request(rng) for _ in range(int(rng.integers(1, MAX_REQUESTS + 1)))]
        for i, req in enumerate(reqs):
            if is_attack[s]:
                label = "attack" if (req.attack or not attack_content and i == 0) else "normal"
            else:
                label = "normal"
            row = {"method": req.method, "url": req.url, "payload": req.payload, "cookie": cookie, "label": label}
            row.update(_headers(rng, req))
            rows.append(row)
    return rows


def write_trace(rows: list[dict], fh) -> None:
    w = csv.DictWriter(fh, fieldnames=list(TRACE_COLUMNS), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def write_trace_file(path, n_sessions: int, attack_fraction: float = 0.683, seed: int = 0, **kw) -> int:
    """Write a trace CSV; returns the number of request rows."""
    rows = generate_trace(n_sessions, attack_fraction, seed, **kw)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_trace(rows, fh)
    return len(rows)


def trace_text(n_sessions: int, attack_fraction: float = 0.683, seed: int = 0, **kw) -> str:
    buf = io.StringIO()
    write_trace(generate_trace(n_sessions, attack_fraction, seed, **kw), buf)
    return buf.getvalue()
