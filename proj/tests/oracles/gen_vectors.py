#!/usr/bin/env python3
"""Independent reference values for the codec tests.

Uses Python's `cryptography` AES, `zlib.crc32` and a from-scratch RC4 so that
nothing here shares code with the C++ implementation. Output is frozen into
vectors/*.json and must only be regenerated deliberately.
"""
import base64
import json
import sys
import zlib

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

TABLE_ROWS = [
    "services=timer&login=&phone=+15555215554&devid=358240051111110&dd=C80B059D&0&http://172.17.0.1:8000/ss/app.php&Sign28tepXXX",
    "services=login&login=123456789&phone=+15555215554&devid=358240051111110&&Sign28tepXXX",
    "services=timer&login=123456789&phone=+15555215554&devid=358240051111110&dd=ADFC7D64&1&Sign28tepXXX",
    "services=sms&text=OTP+for+transaction+%235356323274+is+163572.&number=3085550174&login=123456789&",
]
ZITMO_KEY = b"0523850789a8cfed"


def rc4(key: bytes, data: bytes) -> bytes:
    s = list(range(256))
    j = 0
    for i in range(256):
        j = (j + s[i] + key[i % len(key)]) & 0xFF
        s[i], s[j] = s[j], s[i]
    i = j = 0
    out = bytearray()
    for b in data:
        i = (i + 1) & 0xFF
        j = (j + s[i]) & 0xFF
        s[i], s[j] = s[j], s[i]
        out.append(b ^ s[(s[i] + s[j]) & 0xFF])
    return bytes(out)


def visual_encode(data: bytes) -> bytes:
    return bytes(b if i == 0 else b ^ data[i - 1] for i, b in enumerate(data))


def aes_ecb_space_padded(key: bytes, text: str) -> str:
    raw = text.encode()
    raw += b" " * ((-len(raw)) % 16)
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return base64.b64encode(enc.update(raw) + enc.finalize()).decode()


def main(outdir: str) -> None:
    zitmo = {
        "key": ZITMO_KEY.decode(),
        "rows": [{"plaintext": r, "base64": aes_ecb_space_padded(ZITMO_KEY, r)} for r in TABLE_ROWS],
        "empty_response": {"plaintext": "&Sign28tepXXX",
                           "base64": aes_ecb_space_padded(ZITMO_KEY, "&Sign28tepXXX")},
    }
    zeus_payload = b"bot_id=WIN7-0017&report=status&uptime=120"
    zeus_key = b"lab-botnet-key"
    zeus = {
        "rc4": [{"key": "Key", "data_hex": b"Plaintext".hex(), "out_hex": rc4(b"Key", b"Plaintext").hex().upper()},
                {"key": "Wiki", "data_hex": b"pedia".hex(), "out_hex": rc4(b"Wiki", b"pedia").hex().upper()},
                {"key": "Secret", "data_hex": b"Attack at dawn".hex(),
                 "out_hex": rc4(b"Secret", b"Attack at dawn").hex().upper()}],
        "seal": {"key": zeus_key.decode(), "payload": zeus_payload.decode(),
                 "blob_hex": rc4(zeus_key, visual_encode(zeus_payload)).hex().upper()},
    }
    crc = {"cases": [{"data": d, "hex": "%08X" % (zlib.crc32(d.encode()) & 0xFFFFFFFF)}
                     for d in ["", "123456789", "http://172.17.0.1:8000/ss/app.php"]]}
    for name, doc in [("zitmo.json", zitmo), ("zeus.json", zeus), ("crc32.json", crc)]:
        with open(f"{outdir}/{name}", "w") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "vectors")
