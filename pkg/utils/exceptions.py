"""Excepciones de PeriodicAoI"""


class PeriodicAoIError(Exception):
    """Error base de la aplicación"""


class ConfigurationError(PeriodicAoIError):
    """Escenario o parámetros inválidos (código de salida 2)"""


class StateLogicError(PeriodicAoIError):
    """Uso incorrecto de un estado o de dimensiones (error de programación)"""


class NumericalFailureError(PeriodicAoIError):
    """Fallo numérico durante la integración o la renormalización"""

    def __init__(self, mensaje, t=None):
        super().__init__(mensaje if t is None else f"{mensaje} (t={t:.6g})")
        self.t = t


class InsufficientDataError(PeriodicAoIError):
    """No hay suficientes muestras para la estimación pedida"""
