#!/usr/bin/env python3
"""Independent field packer for the Zest wire format.

Writes one hex-dump fixture per message into tests/fixtures/codec/. Each file
holds a single comment line describing the message followed by the hex bytes
(16 per line). The packer only uses `struct` and never touches the C++ codec,
so the fixtures act as an oracle for it. Run once; the output is committed.
"""

import os
import struct

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "codec")

URI_HOST, OBSERVE, URI_PATH, CONTENT_FORMAT, MAX_AGE, PUBLIC_KEY = 3, 6, 11, 12, 14, 2048
OPTION_NAMES = {3: "uri_host", 6: "observe", 11: "uri_path", 12: "content_format",
                14: "max_age", 2048: "public_key"}


def u32(v):
    return struct.pack(">I", v)


def pack(code, token=b"", options=(), payload=b""):
    out = struct.pack(">BBH", code, len(options), len(token)) + token
    for opt_code, value in options:
        out += struct.pack(">HH", opt_code, len(value)) + value
    return out + payload


def describe(code, token, options, payload):
    opts = []
    for opt_code, value in options:
        if opt_code in (CONTENT_FORMAT, MAX_AGE):
            shown = str(struct.unpack(">I", value)[0])
        else:
            shown = repr(value.decode())
        opts.append("%s=%s" % (OPTION_NAMES[opt_code], shown))
    return "code=%d token=%r options=[%s] payload=%r" % (
        code, token.decode(), ", ".join(opts), payload.decode())


FIXTURES = [
    # One per request/response code.
    ("00_get_request", 1, b"", [(URI_PATH, b"/kv/foo"), (URI_HOST, b"hostA"),
                                 (CONTENT_FORMAT, u32(50))], b""),
    ("01_post_request", 2, b"", [(URI_PATH, b"/kv/foo/bar"), (URI_HOST, b"store1"),
                                  (CONTENT_FORMAT, u32(50))],
     b'{"room": "lounge", "value": 1}'),
    ("02_delete_request", 4, b"", [(URI_PATH, b"/kv/foo"), (URI_HOST, b"store1"),
                                    (CONTENT_FORMAT, u32(0))], b""),
    ("03_ack_post", 65, b"", [], b""),
    ("04_ack_delete", 66, b"", [], b""),
    ("05_ack_payload", 69, b"", [(CONTENT_FORMAT, u32(0))], b"hello"),
    ("06_bad_request", 128, b"", [], b""),
    ("07_unauthorised", 129, b"", [], b""),
    ("08_not_acceptable", 134, b"", [], b""),
    ("09_entity_too_large", 141, b"", [], b""),
    ("10_unsupported_format", 143, b"", [], b""),
    ("11_internal_error", 160, b"", [], b""),
    ("12_service_unavailable", 163, b"", [], b""),
    # Option permutations.
    ("13_get_options_reordered", 1, b"", [(CONTENT_FORMAT, u32(50)), (URI_HOST, b"hostA"),
                                           (URI_PATH, b"/kv/foo")], b""),
    ("14_observe_with_max_age", 1, b"tok", [(URI_PATH, b"/kv/foo/bar"), (URI_HOST, b"store1"),
                                             (CONTENT_FORMAT, u32(50)), (OBSERVE, b"data"),
                                             (MAX_AGE, u32(60))], b""),
    ("15_observe_notify_max_age_zero", 1, b"", [(MAX_AGE, u32(0)), (OBSERVE, b"notify"),
                                                 (URI_PATH, b"/notification/response/echo/1"),
                                                 (URI_HOST, b"store1"), (CONTENT_FORMAT, u32(0))],
     b""),
    ("16_observe_response_public_key", 69, b"", [(CONTENT_FORMAT, u32(0)),
                                                  (PUBLIC_KEY, b"rq:rM>}U?@Lns47E1%kR.o@n%FcmmsL/@{H8]yf7")],
     b"0b9f6c2e-8a51-4f0e-9d7a-3c1e2b4a5d60"),
    ("17_duplicate_options_preserved", 2, b"", [(URI_PATH, b"/kv/a"), (URI_PATH, b"/kv/b"),
                                                 (URI_HOST, b"h"), (CONTENT_FORMAT, u32(42))],
     b"\x00\x01binary"),
    ("18_post_response_with_format", 69, b"", [(CONTENT_FORMAT, u32(50))],
     b'{"timestamp": 1521554211213}'),
]


def main():
    os.makedirs(OUT, exist_ok=True)
    for name, code, token, options, payload in FIXTURES:
        raw = pack(code, token, options, payload)
        lines = ["# " + describe(code, token, options, payload).replace("\n", " ")]
        for i in range(0, len(raw), 16):
            lines.append(" ".join("%02x" % b for b in raw[i:i + 16]))
        with open(os.path.join(OUT, name + ".hex"), "w") as fh:
            fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
