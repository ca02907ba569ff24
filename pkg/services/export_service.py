"""Escritura de resultados: CSV, manifiesto de ejecución y libro Excel"""
import json
import logging
from importlib import metadata
from pathlib import Path
import platform

import pandas as pd

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
WORKBOOK_NAME = "reporte.xlsx"
TRACKED_PACKAGES = ("numpy", "scipy", "pandas", "openpyxl", "PyYAML", "python-dotenv")

# Excel limita los nombres de hoja a 31 caracteres
_MAX_SHEET = 31


def ensure_dir(path):
    destino = Path(path)
    destino.mkdir(parents=True, exist_ok=True)
    return destino


def write_csv(frame, out_dir, name):
    """CSV UTF-8 con encabezado, punto decimal y celdas vacías para valores indefinidos"""
    ruta = ensure_dir(out_dir) / name
    frame.to_csv(ruta, index=False, encoding="utf-8", na_rep="", float_format="%.12g")
    logger.info(f"Escrito {ruta} ({len(frame)} filas)")
    return ruta


def package_versions():
    versiones = {"python": platform.python_version()}
    for nombre in TRACKED_PACKAGES:
        try:
            versiones[nombre] = metadata.version(nombre)
        except metadata.PackageNotFoundError:
            versiones[nombre] = None
    return versiones


def write_manifest(out_dir, command, scenario_raw, extra=None):
    """Manifiesto determinista: eco de la configuración, versiones y datos de la corrida"""
    manifiesto = {
        "command": command,
        "config": scenario_raw,
        "versions": package_versions(),
    }
    if extra:
        manifiesto.update(extra)
    ruta = ensure_dir(out_dir) / MANIFEST_NAME
    with open(ruta, "w", encoding="utf-8") as f:
        json.dump(manifiesto, f, indent=2, sort_keys=True, ensure_ascii=False, default=_json_default)
    logger.info(f"Manifiesto escrito en {ruta}")
    return ruta


def _json_default(valor):
    if hasattr(valor, "tolist"):
        return valor.tolist()
    if hasattr(valor, "item"):
        return valor.item()
    raise TypeError(f"Valor no serializable: {type(valor).__name__}")


def write_workbook(out_dir, sheets):
    """Libro Excel con una hoja por tabla (sheets: dict nombre → DataFrame)"""
    ruta = ensure_dir(out_dir) / WORKBOOK_NAME
    with pd.ExcelWriter(ruta, engine="openpyxl") as writer:
        for nombre, frame in sheets.items():
            frame.to_excel(writer, index=False, sheet_name=nombre[:_MAX_SHEET])
    logger.info(f"Libro Excel escrito en {ruta} ({len(sheets)} hojas)")
    return ruta
