#!/usr/bin/env python3
"""Builds a cookie value with Python's `cryptography` so the C++ opener is
checked against an implementation it shares no code with.

Layout: base64( RSA-OAEP-SHA1(session_key) || AES-128-CBC(session_key, iv=0, PKCS#7)(payload) )
"""
import base64
import json
import sys

from cryptography.hazmat.primitives import hashes, padding, serialization
from cryptography.hazmat.primitives.asymmetric import padding as apad
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes


def main(key_path: str, out_path: str) -> None:
    with open(key_path, "rb") as f:
        priv = serialization.load_pem_private_key(f.read(), password=None)
    session_key = bytes(range(16))
    payload = b"type=checkin&bot=WIN7-0017&seq=0"
    wrapped = priv.public_key().encrypt(
        session_key, apad.OAEP(mgf=apad.MGF1(hashes.SHA1()), algorithm=hashes.SHA1(), label=None))
    padder = padding.PKCS7(128).padder()
    padded = padder.update(payload) + padder.finalize()
    enc = Cipher(algorithms.AES(session_key), modes.CBC(b"\0" * 16)).encryptor()
    body = enc.update(padded) + enc.finalize()
    doc = {"session_key_hex": session_key.hex().upper(), "payload": payload.decode(),
           "aes_hex": body.hex().upper(),
           "cookie": base64.b64encode(wrapped + body).decode()}
    with open(out_path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
