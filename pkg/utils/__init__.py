"""Utilidades de PeriodicAoI"""
