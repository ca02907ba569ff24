"""Configuración centralizada de PeriodicAoI"""
