"""
Report server routes for SDMASK
"""
