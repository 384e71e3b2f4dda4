from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
import logging

from chaoskit.routes import router
from chaoskit.config import get_settings
from chaoskit.core.exceptions import ChaosKitException
from chaoskit.core.middleware import LoggingMiddleware, chaoskit_exception_handler

settings = get_settings()

# Configure logging
logging.basicConfig(
    level=settings["LOG_LEVEL"],
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)

app = FastAPI(
    title="chaoskit API",
    description="Contraction constants and transport estimates for mean-field particle systems",
    version=settings["VERSION"],
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)
app.add_middleware(LoggingMiddleware)
app.add_exception_handler(ChaosKitException, chaoskit_exception_handler)

app.include_router(router, prefix=settings["API_V1_STR"])


@app.get("/")
async def root():
    return {
        "message": "chaoskit API is running",
        "version": settings["VERSION"],
        "status": "healthy"
    }


@app.get("/health")
async def health_check():
    """API health check endpoint"""
    return {
        "status": "healthy",
        "message": "chaoskit API is running",
        "version": settings["VERSION"]
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "chaoskit.main:app",
        host="0.0.0.0",
        port=8000,
        reload=False
    )
